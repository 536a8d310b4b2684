//! Measure-preserving dynamical systems and their information production rate.
//!
//! For a system `T` and an observable partition `P`, the iterated joins
//! `∨_{k<n} T⁻ᵏP` form a refinement flow whose entropies `H_n` are computed
//! exactly: by explicit joins for permutations of a finite space, by
//! cylinder-word enumeration for Markov shifts and by type classes for
//! Bernoulli shifts. `h(P,T) = lim H_n / n`.
//!
//! Finite permutation systems always have `h = 0` since their joins stabilize;
//! positive rates only arise from the symbolic shifts.

mod permutation;
mod symbolic;

use serde::{Deserialize, Serialize};

pub use permutation::{two_atom_partitions, PermutationSystem};
pub use symbolic::{
    markov_entropy_rate, stationary_distribution, SymbolPartition, SymbolicMeasure, SymbolicSystem,
};

use crate::error::{Error, Result};
use crate::flows::{detect_plateau, LimitPointConfig, LimitPointVerdict, LimitStatus};
use crate::scalar::Scalar;

/// Default cap on join atoms, cylinder words or type classes.
pub const DEFAULT_MAX_ATOMS: usize = 1 << 20;

/// Entropies `H_1..=H_n_max` of the iterated joins.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEntropies<T> {
    pub entropies: Vec<T>,
    /// Smallest `n` with `∨_{k<n} = ∨_{k<n+1}`, when the joins were seen to stop refining.
    pub stabilized_at: Option<usize>,
}

/// A system together with the partitions it can be observed through.
pub trait InformationSource<T: Scalar> {
    type Observable;

    /// `H(∨_{k<n} T⁻ᵏP)` for `n = 1..=n_max`, refusing to build more than `max_atoms` atoms.
    fn join_entropies(&self, observable: &Self::Observable, n_max: usize, max_atoms: usize) -> Result<JoinEntropies<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions<T> {
    /// Convergence threshold on successive conditional increments.
    pub conv_tol: T,
    /// Number of trailing increments that must agree.
    pub conv_window: usize,
    pub max_atoms: usize,
}

impl<T: Scalar> Default for RateOptions<T> {
    fn default() -> Self {
        Self {
            conv_tol: T::lit(1e-6),
            conv_window: 3,
            max_atoms: DEFAULT_MAX_ATOMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoRateReport<T> {
    /// `H_n` for `n = 1..=n_max`, bits.
    pub entropies: Vec<T>,
    /// `H_n / n`, bits per replication.
    pub rates: Vec<T>,
    /// `H_{n_max} - H_{n_max - 1}`, bits per replication.
    pub h_estimate: T,
    pub converged: bool,
    pub n_max: usize,
}

/// Information production rate of `observable` under `system`.
///
/// `H_n / n` and the increment `H_n - H_{n-1}` share the limit `h(P,T)`; the
/// increment is the estimate reported, since for Bernoulli and Markov
/// generating partitions it is exact from `n = 2` and for stabilized joins it
/// is exactly zero, while `H_n / n` carries an `O(1/n)` bias.
pub fn info_rate_report<T: Scalar, S: InformationSource<T>>(
    system: &S,
    observable: &S::Observable,
    n_max: usize,
    options: &RateOptions<T>,
) -> Result<InfoRateReport<T>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("n_max must be at least 2".into()));
    }
    let joins = system.join_entropies(observable, n_max, options.max_atoms)?;
    let entropies = joins.entropies;
    let rates: Vec<T> = entropies
        .iter()
        .enumerate()
        .map(|(i, &h)| h / T::count(i + 1))
        .collect();
    let increments: Vec<T> = std::iter::once(entropies[0])
        .chain(entropies.windows(2).map(|w| w[1] - w[0]))
        .collect();
    let h_estimate = increments[n_max - 1].max(T::zero());
    let converged = match joins.stabilized_at {
        Some(n) => n < n_max,
        None => {
            let tail = options.conv_window.min(n_max - 1);
            tail > 0
                && increments
                    .windows(2)
                    .rev()
                    .take(tail)
                    .all(|w| (w[1] - w[0]).abs() < options.conv_tol)
        }
    };
    Ok(InfoRateReport {
        entropies,
        rates,
        h_estimate,
        converged,
        n_max,
    })
}

/// `max_P h(P,T)` over a finite family: a lower bound on the KS entropy.
pub fn ks_entropy_family<T: Scalar, S: InformationSource<T>>(
    system: &S,
    family: &[S::Observable],
    n_max: usize,
    options: &RateOptions<T>,
) -> Result<T> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    family.iter().try_fold(T::zero(), |best, p| {
        Ok(best.max(info_rate_report(system, p, n_max, options)?.h_estimate))
    })
}

/// Whether the family-restricted KS entropy exceeds `tol`. Relative to the
/// family: `false` only means no partition in it produces information.
pub fn is_chaotic<T: Scalar, S: InformationSource<T>>(
    system: &S,
    family: &[S::Observable],
    n_max: usize,
    tol: T,
    options: &RateOptions<T>,
) -> Result<bool> {
    Ok(ks_entropy_family(system, family, n_max, options)? > tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck<T> {
    pub verdict: LimitPointVerdict<T>,
    pub h_estimate: T,
    /// A witnessed limit point of the join flow came with `h < ε`, or no limit point was witnessed.
    pub consistent: bool,
}

/// Runs the limit-point detector on the join flow `{∨_{k<n} T⁻ᵏP}` and
/// checks that a witnessed limit point comes with a vanishing rate.
///
/// The detector horizon is `n_max`; `config.horizon` is ignored and the
/// window shrinks to `n_max` when it is longer.
pub fn theorem_limit_point_check<T: Scalar, S: InformationSource<T>>(
    system: &S,
    observable: &S::Observable,
    config: &LimitPointConfig<T>,
    n_max: usize,
    options: &RateOptions<T>,
) -> Result<TheoremCheck<T>> {
    let config = LimitPointConfig {
        horizon: n_max.max(config.window),
        ..*config
    };
    config.validate()?;
    let report = info_rate_report(system, observable, n_max, options)?;
    let verdict = detect_plateau(&report.entropies, &config)?;
    let consistent = verdict.status != LimitStatus::Witnessed || report.h_estimate < config.epsilon;
    Ok(TheoremCheck {
        verdict,
        h_estimate: report.h_estimate,
        consistent,
    })
}
