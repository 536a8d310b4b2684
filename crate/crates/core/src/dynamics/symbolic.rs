//! Left shifts on symbol sequences with Bernoulli or stationary Markov measure.
//!
//! The iterated join of a partition of the alphabet (read at the first
//! coordinate) is the partition into length-`n` cylinder words of atom labels.
//! Its entropy is computed exactly by a depth-first walk over those words,
//! carrying the forward vector `α[s] = P(word, last symbol = s)`. Under a
//! Bernoulli measure the label process is again Bernoulli, so words are
//! grouped by their label counts (type classes) instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{InformationSource, JoinEntropies};

const PROB_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SymbolicMeasure<T> {
    Bernoulli { p: Vec<T> },
    Markov { pi: Vec<T>, q: Vec<Vec<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicSystem<T> {
    measure: SymbolicMeasure<T>,
}

fn check_distribution<T: Scalar>(p: &[T]) -> Result<()> {
    let ok = p.iter().all(|x| x.is_finite() && *x >= T::zero())
        && (p.iter().copied().sum::<T>() - T::one()).abs() <= T::lit(PROB_TOL);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidDistribution)
    }
}

fn check_stochastic<T: Scalar>(q: &[Vec<T>]) -> Result<()> {
    let m = q.len();
    if m < 2 {
        return Err(Error::InvalidParameter("alphabet needs at least 2 symbols".into()));
    }
    if q.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidParameter("transition matrix must be square".into()));
    }
    q.iter().try_for_each(|row| check_distribution(row))
}

fn stationarity_residual<T: Scalar>(pi: &[T], q: &[Vec<T>]) -> T {
    (0..q.len())
        .map(|j| {
            let flow_in: T = (0..q.len()).map(|i| pi[i] * q[i][j]).sum();
            (flow_in - pi[j]).abs()
        })
        .fold(T::zero(), T::max)
}

/// Solves `πQ = π`, `Σπ = 1` by Gaussian elimination with partial pivoting.
pub fn stationary_distribution<T: Scalar>(q: &[Vec<T>]) -> Result<Vec<T>> {
    check_stochastic(q)?;
    let m = q.len();
    // rows: (Qᵀ - I) with the last equation replaced by normalization
    let mut a: Vec<Vec<T>> = (0..m)
        .map(|i| {
            let mut row: Vec<T> = (0..m).map(|j| q[j][i]).collect();
            row[i] -= T::one();
            row.push(T::zero());
            row
        })
        .collect();
    a[m - 1] = vec![T::one(); m + 1];
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))
            .expect("nonempty range");
        if a[pivot][col].abs() < T::lit(1e-14) {
            return Err(Error::InvalidParameter(
                "transition matrix has no unique stationary distribution".into(),
            ));
        }
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
    }
    let pi: Vec<T> = (0..m).map(|i| (a[i][m] / a[i][i]).max(T::zero())).collect();
    let total: T = pi.iter().copied().sum();
    Ok(pi.into_iter().map(|x| x / total).collect())
}

/// `-Σ_i π_i Σ_j Q_ij log2 Q_ij`, the entropy rate of a stationary Markov chain.
pub fn markov_entropy_rate<T: Scalar>(pi: &[T], q: &[Vec<T>]) -> Result<T> {
    check_stochastic(q)?;
    if pi.len() != q.len() {
        return Err(Error::InvalidParameter("π and Q sizes differ".into()));
    }
    check_distribution(pi)?;
    let residual = stationarity_residual(pi, q);
    if residual > T::lit(STATIONARY_TOL) {
        return Err(Error::NotStationary {
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    let rate: T = pi
        .iter()
        .zip(q)
        .map(|(&p, row)| -p * row.iter().map(|&x| x.xlog2x()).sum::<T>())
        .sum();
    Ok(rate.max(T::zero()))
}

impl<T: Scalar> SymbolicSystem<T> {
    pub fn bernoulli(p: Vec<T>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidParameter("alphabet needs at least 2 symbols".into()));
        }
        check_distribution(&p)?;
        Ok(Self {
            measure: SymbolicMeasure::Bernoulli { p },
        })
    }

    /// Markov shift started from the stationary distribution of `q`.
    pub fn markov(q: Vec<Vec<T>>) -> Result<Self> {
        let pi = stationary_distribution(&q)?;
        Self::markov_with_stationary(pi, q)
    }

    pub fn markov_with_stationary(pi: Vec<T>, q: Vec<Vec<T>>) -> Result<Self> {
        markov_entropy_rate(&pi, &q)?;
        Ok(Self {
            measure: SymbolicMeasure::Markov { pi, q },
        })
    }

    pub fn measure(&self) -> &SymbolicMeasure<T> {
        &self.measure
    }

    pub fn alphabet_size(&self) -> usize {
        match &self.measure {
            SymbolicMeasure::Bernoulli { p } => p.len(),
            SymbolicMeasure::Markov { pi, .. } => pi.len(),
        }
    }

    /// Closed-form entropy rate of the shift, in bits per symbol.
    pub fn entropy_rate(&self) -> T {
        match &self.measure {
            SymbolicMeasure::Bernoulli { p } => crate::scalar::shannon_bits(p),
            SymbolicMeasure::Markov { pi, q } => {
                markov_entropy_rate(pi, q).expect("validated at construction")
            }
        }
    }

    fn initial(&self) -> &[T] {
        match &self.measure {
            SymbolicMeasure::Bernoulli { p } => p,
            SymbolicMeasure::Markov { pi, .. } => pi,
        }
    }

    fn transition(&self, from: usize, to: usize) -> T {
        match &self.measure {
            SymbolicMeasure::Bernoulli { p } => p[to],
            SymbolicMeasure::Markov { q, .. } => q[from][to],
        }
    }

    /// Probabilities of all `n`-cylinders of the observable, in lexicographic
    /// label order. Intended for small `n`; the count is `atoms^n`.
    pub fn cylinder_distribution(
        &self,
        observable: &SymbolPartition,
        n: usize,
        max_words: usize,
    ) -> Result<Vec<T>> {
        self.check_observable(observable)?;
        check_word_cap(observable.atom_count(), n, max_words)?;
        let mut out = vec![T::zero(); observable.atom_count().pow(n as u32)];
        self.walk(observable, n, &mut |depth, word, p| {
            if depth == n {
                out[word] = p;
            }
        });
        Ok(out)
    }

    fn check_observable(&self, observable: &SymbolPartition) -> Result<()> {
        if observable.labels.len() == self.alphabet_size() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Depth-first walk over label words of length `1..=n_max`. Calls
    /// `visit(length, word_index, probability)` for every word of positive
    /// probability; extensions of null words are skipped.
    fn walk(&self, observable: &SymbolPartition, n_max: usize, visit: &mut dyn FnMut(usize, usize, T)) {
        let m = self.alphabet_size();
        let mut stack: Vec<(usize, usize, Vec<T>)> = Vec::new();
        for label in (0..observable.atom_count()).rev() {
            let alpha: Vec<T> = (0..m)
                .map(|t| if observable.labels[t] == label { self.initial()[t] } else { T::zero() })
                .collect();
            stack.push((1, label, alpha));
        }
        while let Some((depth, word, alpha)) = stack.pop() {
            let p: T = alpha.iter().copied().sum();
            if p <= T::zero() {
                continue;
            }
            visit(depth, word, p);
            if depth == n_max {
                continue;
            }
            for label in (0..observable.atom_count()).rev() {
                let next: Vec<T> = (0..m)
                    .map(|t| {
                        if observable.labels[t] != label {
                            return T::zero();
                        }
                        alpha
                            .iter()
                            .enumerate()
                            .filter(|(_, a)| **a > T::zero())
                            .map(|(s, &a)| a * self.transition(s, t))
                            .sum()
                    })
                    .collect();
                stack.push((depth + 1, word * observable.atom_count() + label, next));
            }
        }
    }
}

fn check_word_cap(atoms: usize, n: usize, max_words: usize) -> Result<()> {
    let needed = (atoms as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > max_words as u128 {
        return Err(Error::ResourceCap {
            what: "cylinder words",
            needed,
            cap: max_words as u128,
        });
    }
    Ok(())
}

impl<T: Scalar> SymbolicSystem<T> {
    fn enumerated_entropies(&self, observable: &SymbolPartition, n_max: usize, max_words: usize) -> Result<Vec<T>> {
        check_word_cap(observable.atom_count(), n_max, max_words)?;
        let mut entropies = vec![T::zero(); n_max];
        self.walk(observable, n_max, &mut |depth, _, p| {
            entropies[depth - 1] -= p.xlog2x();
        });
        Ok(entropies)
    }
}

/// Largest `n` for which multinomial weights are formed exactly in integers.
const EXACT_TYPE_LEN: usize = 60;

/// `n! / Πc_i!`, if it fits.
fn multinomial(counts: &[usize]) -> Option<u128> {
    let mut acc: u128 = 1;
    let mut total = 0u128;
    for &c in counts {
        for k in 1..=c as u128 {
            total += 1;
            // acc * total / k stays integral: it is C(total, k) times the previous multinomial
            acc = acc.checked_mul(total)? / k;
        }
    }
    Some(acc)
}

/// `H_n` of an i.i.d. label process with atom probabilities `q`, summed over
/// count vectors `c` with weight `n! / Πc_i!` and word probability `Πq_i^{c_i}`.
fn type_class_entropies<T: Scalar>(q: &[T], n_max: usize, max_types: usize) -> Result<Vec<T>> {
    let q: Vec<T> = q.iter().copied().filter(|x| *x > T::zero()).collect();
    let log2s: Vec<T> = q.iter().map(|x| x.log2()).collect();
    let m = q.len();
    // C(n_max + m - 1, m - 1) count vectors at the largest n
    let needed = (1..m).fold(1u128, |acc, i| acc.saturating_mul((n_max + i) as u128) / i as u128);
    if needed > max_types as u128 {
        return Err(Error::ResourceCap {
            what: "type classes",
            needed,
            cap: max_types as u128,
        });
    }
    let ln_fact: Vec<T> = std::iter::once(T::zero())
        .chain((1..=n_max).scan(T::zero(), |acc, k| {
            *acc += T::count(k).ln();
            Some(*acc)
        }))
        .collect();
    let mut entropies = Vec::with_capacity(n_max);
    let mut counts = vec![0usize; m];
    for n in 1..=n_max {
        let mut h = T::zero();
        counts.iter_mut().for_each(|c| *c = 0);
        counts[m - 1] = n;
        loop {
            let log2_p: T = counts.iter().zip(&log2s).map(|(&c, &l)| T::count(c) * l).sum();
            let exact = multinomial(&counts).filter(|_| n <= EXACT_TYPE_LEN);
            let mass = match exact.and_then(T::from_u128) {
                Some(mult) => mult * counts.iter().zip(&q).fold(T::one(), |acc, (&c, &x)| acc * x.powi(c as i32)),
                None => {
                    let ln_mult = counts.iter().fold(ln_fact[n], |acc, &c| acc - ln_fact[c]);
                    (ln_mult + log2_p * T::LN_2()).exp()
                }
            };
            h -= mass * log2_p;
            if !next_composition(&mut counts) {
                break;
            }
        }
        entropies.push(h);
    }
    Ok(entropies)
}

/// Steps through the compositions of `Σcounts` into `counts.len()` parts.
fn next_composition(counts: &mut [usize]) -> bool {
    let m = counts.len();
    if m < 2 {
        return false;
    }
    let total: usize = counts.iter().sum();
    // the rightmost free part with room moves one unit left
    let Some(i) = (0..m - 1).rev().find(|&i| counts[i + 1..].iter().sum::<usize>() > 0) else {
        return false;
    };
    counts[i] += 1;
    let used: usize = counts[..=i].iter().sum();
    counts[i + 1..].iter_mut().for_each(|c| *c = 0);
    counts[m - 1] = total - used;
    true
}

impl<T: Scalar> InformationSource<T> for SymbolicSystem<T> {
    type Observable = SymbolPartition;

    /// `max_words` caps cylinder words for Markov shifts and type classes for Bernoulli shifts.
    fn join_entropies(&self, observable: &SymbolPartition, n_max: usize, max_words: usize) -> Result<JoinEntropies<T>> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        self.check_observable(observable)?;
        let entropies = match &self.measure {
            SymbolicMeasure::Bernoulli { p } => {
                let mut q = vec![T::zero(); observable.atom_count()];
                for (s, &l) in observable.labels.iter().enumerate() {
                    q[l] += p[s];
                }
                type_class_entropies(&q, n_max, max_words)?
            }
            SymbolicMeasure::Markov { .. } => self.enumerated_entropies(observable, n_max, max_words)?,
        };
        Ok(JoinEntropies {
            entropies: entropies.into_iter().map(|h| h.max(T::zero())).collect(),
            stabilized_at: None,
        })
    }
}

/// A partition of the alphabet, observed at the first coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolPartition {
    labels: Vec<usize>,
    atoms: usize,
}

impl SymbolPartition {
    /// Symbols with equal labels share an atom. Labels are renumbered by first appearance.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyAtom);
        }
        let mut seen: Vec<usize> = Vec::new();
        let labels = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(i) => i,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect();
        Ok(Self {
            labels,
            atoms: seen.len(),
        })
    }

    /// One atom per symbol; generating for the shift.
    pub fn generating(alphabet_size: usize) -> Self {
        Self {
            labels: (0..alphabet_size).collect(),
            atoms: alphabet_size,
        }
    }

    pub fn trivial(alphabet_size: usize) -> Self {
        Self {
            labels: vec![0; alphabet_size],
            atoms: 1,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn atom_count(&self) -> usize {
        self.atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{info_rate_report, RateOptions, DEFAULT_MAX_ATOMS};

    #[test]
    fn stationary_distribution_of_two_state_chain() {
        let q = vec![vec![0.9f64, 0.1], vec![0.5, 0.5]];
        let pi = stationary_distribution(&q).unwrap();
        assert!((pi[0] - 5.0 / 6.0).abs() < 1e-15 && (pi[1] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn markov_entropy_rate_examples() {
        let id = vec![vec![1.0f64, 0.0], vec![0.0, 1.0]];
        assert_eq!(markov_entropy_rate(&[0.3, 0.7], &id).unwrap(), 0.0);

        let rows = vec![vec![0.25f64, 0.75], vec![0.25, 0.75]];
        let h = markov_entropy_rate(&[0.25, 0.75], &rows).unwrap();
        assert!((h - crate::scalar::shannon_bits(&[0.25, 0.75])).abs() < 1e-15);

        // 5/6 H(0.9) + 1/6 H(0.5), evaluated with mpmath
        let q = vec![vec![0.9f64, 0.1], vec![0.5, 0.5]];
        let h = markov_entropy_rate(&[5.0 / 6.0, 1.0 / 6.0], &q).unwrap();
        assert!((h - 0.557_496_327_991_067_7).abs() < 1e-14);

        assert!(matches!(markov_entropy_rate(&[0.5, 0.5], &q), Err(Error::NotStationary { .. })));
    }

    #[test]
    fn bernoulli_cylinders_are_product_measure() {
        let s = SymbolicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
        let words = s.cylinder_distribution(&SymbolPartition::generating(2), 3, 1 << 20).unwrap();
        assert_eq!(words, vec![0.125; 8]);
    }

    #[test]
    fn fair_coin_rate_is_one() {
        let s = SymbolicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
        let r = info_rate_report(&s, &SymbolPartition::generating(2), 16, &RateOptions::default()).unwrap();
        assert_eq!(r.h_estimate, 1.0);
        for (n, h) in r.entropies.iter().enumerate() {
            assert_eq!(*h, (n + 1) as f64);
        }
        assert!(r.converged);
    }

    #[test]
    fn markov_chain_rate_matches_closed_form() {
        let s = SymbolicSystem::markov(vec![vec![0.9f64, 0.1], vec![0.5, 0.5]]).unwrap();
        let r = info_rate_report(&s, &SymbolPartition::generating(2), 14, &RateOptions::default()).unwrap();
        assert!((r.h_estimate - 0.557_496_327_991_067_7).abs() < 1e-6);
    }

    #[test]
    fn coarse_observable_of_chain_with_zeros() {
        // period-2 chain: the trivial observable carries no information
        let s = SymbolicSystem::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = info_rate_report(&s, &SymbolPartition::trivial(2), 8, &RateOptions::default()).unwrap();
        assert_eq!(r.h_estimate, 0.0);
        let r = info_rate_report(&s, &SymbolPartition::generating(2), 8, &RateOptions::default()).unwrap();
        assert_eq!(r.entropies, vec![1.0; 8]);
        assert_eq!(r.h_estimate, 0.0);
    }

    #[test]
    fn word_cap_is_enforced() {
        let s = SymbolicSystem::markov(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let err = s.join_entropies(&SymbolPartition::generating(2), 21, DEFAULT_MAX_ATOMS).unwrap_err();
        assert!(matches!(err, Error::ResourceCap { .. }));
        // type classes grow polynomially: C(21, 5) ≪ 2^20 ≪ C(1005, 5)
        let b = SymbolicSystem::bernoulli(vec![0.125, 0.125, 0.125, 0.125, 0.25, 0.25]).unwrap();
        assert!(b.join_entropies(&SymbolPartition::generating(6), 16, DEFAULT_MAX_ATOMS).is_ok());
        let err = b.join_entropies(&SymbolPartition::generating(6), 1000, DEFAULT_MAX_ATOMS).unwrap_err();
        assert!(matches!(err, Error::ResourceCap { .. }));
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(SymbolicSystem::bernoulli(vec![1.0]).is_err());
        assert!(SymbolicSystem::bernoulli(vec![0.6, 0.6]).is_err());
        assert!(SymbolicSystem::markov(vec![vec![0.5, 0.5], vec![0.5]]).is_err());
        assert!(SymbolicSystem::markov(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        let s = SymbolicSystem::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            s.join_entropies(&SymbolPartition::generating(3), 2, 100).unwrap_err(),
            Error::SpaceMismatch
        );
    }

    #[test]
    fn symbol_partition_relabels() {
        let p = SymbolPartition::from_labels(&[7, 3, 7]).unwrap();
        assert_eq!(p.labels(), &[0, 1, 0]);
        assert_eq!(p.atom_count(), 2);
    }

    #[test]
    fn compositions_are_enumerated_once() {
        let mut c = vec![0, 0, 4];
        let mut seen = vec![c.clone()];
        while next_composition(&mut c) {
            seen.push(c.clone());
        }
        // C(6, 2)
        assert_eq!(seen.len(), 15);
        assert_eq!(seen.last().unwrap(), &vec![4, 0, 0]);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn type_classes_match_word_enumeration() {
        let s = SymbolicSystem::bernoulli(vec![0.1f64, 0.2, 0.3, 0.4]).unwrap();
        for labels in [vec![0, 1, 2, 3], vec![0, 1, 1, 0], vec![0, 0, 0, 0], vec![2, 0, 2, 1]] {
            let obs = SymbolPartition::from_labels(&labels).unwrap();
            let fast = s.join_entropies(&obs, 7, 1 << 20).unwrap().entropies;
            let slow = s.enumerated_entropies(&obs, 7, 1 << 20).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "{labels:?}: {a} vs {b}");
            }
        }
        let zero = SymbolicSystem::bernoulli(vec![0.5f64, 0.0, 0.5]).unwrap();
        let h = zero.join_entropies(&SymbolPartition::generating(3), 5, 1 << 20).unwrap().entropies;
        assert!((h[4] - 5.0).abs() < 1e-12);
        assert_eq!(multinomial(&[2, 1, 1]), Some(12));
        assert_eq!(multinomial(&[30, 30]), Some(118_264_581_564_861_424));
    }
}
