//! Block partitions of a periodic 1D lattice and the partitions they induce on
//! spin-configuration space under the Gibbs measure.
//!
//! An observer who only sees block variables `S'_B = f({S_i}_{i∈B})` performs
//! the experiment whose atoms are the sets of configurations with equal block
//! variables. Iterating the block map (blocks of blocks) gives a
//! coarse-graining flow of such partitions, one element per renormalization
//! step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{detect_limit_point, FlowDirection, LimitPointConfig, LimitPointVerdict, PartitionFlow};
use crate::ising::{config_exponent, partition_function, CouplingVector};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::space::{FiniteProbabilitySpace, Normalization};

/// Default cap on enumerated spin configurations.
pub const DEFAULT_MAX_CONFIGS: usize = 1 << 16;

/// Largest chain [`gibbs_space`] will enumerate regardless of the cap.
pub const MAX_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub site_count: usize,
    /// Lattice spacing; a label only.
    pub spacing: f64,
    pub block_size: usize,
}

impl LatticeSpec {
    pub fn new(site_count: usize, block_size: usize) -> Result<Self> {
        if site_count == 0 {
            return Err(Error::InvalidParameter("lattice needs at least one site".into()));
        }
        if block_size < 2 {
            return Err(Error::InvalidParameter("block size must be at least 2".into()));
        }
        Ok(Self {
            site_count,
            spacing: 1.0,
            block_size,
        })
    }

    /// Sites per block at `level` (`l^{level+1}`), if it divides the lattice.
    pub fn block_len(&self, level: usize) -> Result<usize> {
        let len = u32::try_from(level + 1)
            .ok()
            .and_then(|e| self.block_size.checked_pow(e))
            .filter(|len| *len <= self.site_count && self.site_count % len == 0);
        len.ok_or_else(|| Error::InvalidParameter(format!("level {level} too deep for {} sites", self.site_count)))
    }

    /// Deepest level whose blocks tile the lattice, if any.
    pub fn max_level(&self) -> Option<usize> {
        (0..).take_while(|&lv| self.block_len(lv).is_ok()).last()
    }
}

/// Uniform space on the sites `0..n`, used to carry site partitions.
pub fn site_space<T: Scalar>(n: usize) -> Result<Arc<FiniteProbabilitySpace<T>>> {
    Ok(Arc::new(FiniteProbabilitySpace::uniform(n)?))
}

/// Consecutive site blocks of length `l^{level+1}`.
pub fn block_site_partition<T: Scalar>(spec: &LatticeSpec, level: usize) -> Result<Partition<T>> {
    let len = spec.block_len(level)?;
    Partition::from_labels(site_space(spec.site_count)?, (0..spec.site_count).map(|s| s / len))
}

/// A block variable `f`: maps the spins of one block (each ±1) to ±1.
pub trait BlockRule: Send + Sync {
    fn block_spin(&self, spins: &[i8]) -> i8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// The first spin of the block.
    #[default]
    First,
    Last,
    Up,
}

/// Sign of the block magnetization, with a tie rule for blocks that sum to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MajorityRule {
    pub tie: TieBreak,
}

impl BlockRule for MajorityRule {
    fn block_spin(&self, spins: &[i8]) -> i8 {
        let sum: i32 = spins.iter().map(|&s| i32::from(s)).sum();
        match sum.signum() {
            0 => match self.tie {
                TieBreak::First => spins[0],
                TieBreak::Last => spins[spins.len() - 1],
                TieBreak::Up => 1,
            },
            s => s as i8,
        }
    }
}

/// Configuration space of a periodic chain with its Gibbs measure.
///
/// Point `c` is the configuration whose spin `i` is up iff bit `i` of `c` is set.
#[derive(Debug, Clone)]
pub struct IsingGibbsSpace<T> {
    space: Arc<FiniteProbabilitySpace<T>>,
    couplings: CouplingVector<T>,
    n_sites: usize,
    log_z: T,
}

impl<T: Scalar> IsingGibbsSpace<T> {
    pub fn space(&self) -> &Arc<FiniteProbabilitySpace<T>> {
        &self.space
    }

    pub fn couplings(&self) -> CouplingVector<T> {
        self.couplings
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Normalization constant `Z` of the Boltzmann weights.
    pub fn normalization(&self) -> T {
        self.log_z.exp()
    }

    pub fn log_normalization(&self) -> T {
        self.log_z
    }

    pub fn spins(&self, config: usize) -> Vec<i8> {
        (0..self.n_sites)
            .map(|i| if (config >> i) & 1 == 1 { 1 } else { -1 })
            .collect()
    }
}

/// Enumerates all `2^n` configurations with weights `∝ exp(K0 ΣS + K1 ΣSS)`.
pub fn gibbs_space<T: Scalar>(k: CouplingVector<T>, n_sites: usize, max_configs: usize) -> Result<IsingGibbsSpace<T>> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("chain needs at least one site".into()));
    }
    let needed = 1u128 << n_sites.min(127);
    if n_sites > MAX_SITES || needed > max_configs as u128 {
        return Err(Error::ResourceCap {
            what: "spin configurations",
            needed,
            cap: (max_configs as u128).min(1 << MAX_SITES),
        });
    }
    crate::ising::transfer_matrix(k)?;
    let count = 1usize << n_sites;
    let exponents: Vec<T> = (0..count as u64).map(|c| config_exponent(k, c, n_sites)).collect();
    let top = exponents.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = exponents.iter().map(|&e| (e - top).exp()).collect();
    let total: T = weights.iter().copied().sum();
    let ids = (0..count).map(|c| {
        (0..n_sites)
            .map(|i| if (c >> i) & 1 == 1 { '+' } else { '-' })
            .collect::<String>()
    });
    let space = FiniteProbabilitySpace::new(ids, weights, Normalization::Rescale)?;
    Ok(IsingGibbsSpace {
        space: Arc::new(space),
        couplings: k,
        n_sites,
        log_z: top + total.ln(),
    })
}

/// Relative gap between the enumerated normalization and `Tr T^n`.
pub fn normalization_gap<T: Scalar>(gibbs: &IsingGibbsSpace<T>) -> Result<T> {
    let z = partition_function(gibbs.couplings, gibbs.n_sites)?;
    Ok((gibbs.normalization() - z).abs() / z)
}

fn contiguous_blocks<T: Scalar>(sites: &Partition<T>, n_sites: usize) -> Result<Vec<(usize, usize)>> {
    if sites.space().len() != n_sites {
        return Err(Error::SpaceMismatch);
    }
    sites
        .atoms()
        .iter()
        .map(|atom| {
            let (lo, hi) = (atom[0], atom[atom.len() - 1]);
            if hi - lo + 1 == atom.len() {
                Ok((lo, hi + 1))
            } else {
                Err(Error::InvalidParameter("site partition atoms must be contiguous blocks".into()))
            }
        })
        .collect()
}

fn pack(block_spins: &[i8]) -> u64 {
    block_spins
        .iter()
        .enumerate()
        .fold(0, |key, (b, &s)| if s > 0 { key | 1 << b } else { key })
}

/// The configuration partition of one block transformation: configurations
/// share an atom iff every block of `sites` has the same block variable.
pub fn induced_config_partition<T: Scalar>(
    gibbs: &IsingGibbsSpace<T>,
    sites: &Partition<T>,
    rule: &dyn BlockRule,
) -> Result<Partition<T>> {
    let blocks = contiguous_blocks(sites, gibbs.n_sites)?;
    let keys = (0..gibbs.space.len()).map(|c| {
        let spins = gibbs.spins(c);
        let block_spins: Vec<i8> = blocks.iter().map(|&(lo, hi)| rule.block_spin(&spins[lo..hi])).collect();
        pack(&block_spins)
    });
    Partition::from_labels(gibbs.space.clone(), keys)
}

/// Block variables after `level + 1` renormalization steps, each step applying
/// `rule` to `l` consecutive variables of the previous one.
pub fn iterated_block_spins(spins: &[i8], block_size: usize, level: usize, rule: &dyn BlockRule) -> Vec<i8> {
    let mut current = spins.to_vec();
    for _ in 0..=level {
        current = current.chunks(block_size).map(|c| rule.block_spin(c)).collect();
    }
    current
}

/// The configuration partition seen after `level + 1` iterated block transformations.
pub fn hierarchical_config_partition<T: Scalar>(
    gibbs: &IsingGibbsSpace<T>,
    spec: &LatticeSpec,
    level: usize,
    rule: &dyn BlockRule,
) -> Result<Partition<T>> {
    if spec.site_count != gibbs.n_sites {
        return Err(Error::SpaceMismatch);
    }
    spec.block_len(level)?;
    let keys = (0..gibbs.space.len())
        .map(|c| pack(&iterated_block_spins(&gibbs.spins(c), spec.block_size, level, rule)));
    Partition::from_labels(gibbs.space.clone(), keys)
}

/// Probability of each tuple of block variables at `level`, sorted by tuple.
pub fn block_spin_distribution<T: Scalar>(
    gibbs: &IsingGibbsSpace<T>,
    spec: &LatticeSpec,
    level: usize,
    rule: &dyn BlockRule,
) -> Result<Vec<(Vec<i8>, T)>> {
    if spec.site_count != gibbs.n_sites {
        return Err(Error::SpaceMismatch);
    }
    spec.block_len(level)?;
    let mut dist: std::collections::BTreeMap<Vec<i8>, T> = Default::default();
    for c in 0..gibbs.space.len() {
        let key = iterated_block_spins(&gibbs.spins(c), spec.block_size, level, rule);
        *dist.entry(key).or_insert(T::zero()) += gibbs.space.weight(c);
    }
    Ok(dist.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEntropy<T> {
    pub level: usize,
    pub block_sites: usize,
    pub atoms: usize,
    pub h_bits: T,
}

#[derive(Debug, Clone)]
pub struct RgEntropyFlow<T> {
    pub levels: Vec<LevelEntropy<T>>,
    pub coarse_graining: PartitionFlow<T>,
    pub refinement: PartitionFlow<T>,
    pub coarse_verdict: LimitPointVerdict<T>,
    pub refinement_verdict: LimitPointVerdict<T>,
}

impl<T: Scalar> RgEntropyFlow<T> {
    pub fn entropies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.h_bits).collect()
    }
}

/// Parameters of [`rg_entropy_flow`].
#[derive(Clone, Copy)]
pub struct FlowSetup<'a, T> {
    pub couplings: CouplingVector<T>,
    pub n_sites: usize,
    pub block_size: usize,
    pub levels: usize,
    pub rule: &'a dyn BlockRule,
    pub max_configs: usize,
}

impl<'a, T: Scalar> FlowSetup<'a, T> {
    pub fn new(couplings: CouplingVector<T>, n_sites: usize, block_size: usize, levels: usize, rule: &'a dyn BlockRule) -> Self {
        Self {
            couplings,
            n_sites,
            block_size,
            levels,
            rule,
            max_configs: DEFAULT_MAX_CONFIGS,
        }
    }
}

/// The coarse-graining flow `P_0 ≥ P_1 ≥ …` of induced configuration partitions.
pub fn rg_coarse_graining_flow<T: Scalar>(setup: &FlowSetup<'_, T>) -> Result<PartitionFlow<T>> {
    if setup.levels == 0 {
        return Err(Error::InvalidParameter("at least one level is required".into()));
    }
    let spec = LatticeSpec::new(setup.n_sites, setup.block_size)?;
    spec.block_len(setup.levels - 1)?;
    let gibbs = gibbs_space(setup.couplings, setup.n_sites, setup.max_configs)?;
    let parts = (0..setup.levels)
        .map(|level| hierarchical_config_partition(&gibbs, &spec, level, setup.rule))
        .collect::<Result<Vec<_>>>()?;
    PartitionFlow::new(parts, FlowDirection::CoarseGraining)
}

/// The reverse of [`rg_coarse_graining_flow`], a refinement flow.
pub fn reversed_refinement_flow<T: Scalar>(setup: &FlowSetup<'_, T>) -> Result<PartitionFlow<T>> {
    Ok(rg_coarse_graining_flow(setup)?.reverse())
}

/// Entropies of the RG coarse-graining flow, its reverse, and limit-point
/// verdicts for both directions.
pub fn rg_entropy_flow<T: Scalar>(setup: &FlowSetup<'_, T>, detector: &LimitPointConfig<T>) -> Result<RgEntropyFlow<T>> {
    let coarse = rg_coarse_graining_flow(setup)?;
    let entropies = coarse.entropy_sequence(coarse.len())?;
    let levels = coarse
        .partitions()
        .iter()
        .zip(entropies)
        .enumerate()
        .map(|(level, (p, h_bits))| LevelEntropy {
            level,
            block_sites: setup.block_size.pow(level as u32 + 1),
            atoms: p.atom_count(),
            h_bits,
        })
        .collect();
    let refinement = coarse.reverse();
    let refinement = PartitionFlow::new(refinement.partitions().to_vec(), FlowDirection::Refinement)?;
    let coarse_verdict = detect_limit_point(&coarse, detector)?;
    let refinement_verdict = detect_limit_point(&refinement, detector)?;
    Ok(RgEntropyFlow {
        levels,
        coarse_graining: coarse,
        refinement,
        coarse_verdict,
        refinement_verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::LimitStatus;
    use crate::partition::is_coarsening;

    fn k(k0: f64, k1: f64) -> CouplingVector<f64> {
        CouplingVector::new(k0, k1).unwrap()
    }

    const MAJORITY: MajorityRule = MajorityRule { tie: TieBreak::First };

    #[test]
    fn block_site_partitions() {
        let spec = LatticeSpec::new(8, 2).unwrap();
        let p0: Partition<f64> = block_site_partition(&spec, 0).unwrap();
        assert_eq!(p0.atoms(), &[vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        let p1: Partition<f64> = block_site_partition(&spec, 1).unwrap();
        assert_eq!(p1.atoms(), &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert!(is_coarsening(&p1, &p0).unwrap());
        let p2: Partition<f64> = block_site_partition(&spec, 2).unwrap();
        assert_eq!(p2.atom_count(), 1);
        assert!(block_site_partition::<f64>(&spec, 3).is_err());
        assert_eq!(spec.max_level(), Some(2));
        assert!(LatticeSpec::new(8, 1).is_err());
        assert_eq!(LatticeSpec::new(6, 4).unwrap().max_level(), None);
    }

    #[test]
    fn majority_rule() {
        assert_eq!(MAJORITY.block_spin(&[1, 1, -1]), 1);
        assert_eq!(MAJORITY.block_spin(&[-1, 1]), -1);
        assert_eq!(MAJORITY.block_spin(&[1, -1]), 1);
        assert_eq!(MajorityRule { tie: TieBreak::Last }.block_spin(&[1, -1]), -1);
        assert_eq!(MajorityRule { tie: TieBreak::Up }.block_spin(&[-1, 1]), 1);
    }

    #[test]
    fn gibbs_space_examples() {
        let g = gibbs_space(k(0.0, 0.0), 2, DEFAULT_MAX_CONFIGS).unwrap();
        assert_eq!(g.space().weights(), &[0.25; 4]);

        let g = gibbs_space(k(0.0, std::f64::consts::LN_2), 2, DEFAULT_MAX_CONFIGS).unwrap();
        // configs --, +-, -+, ++
        let expected = [4.0 / 8.5, 0.25 / 8.5, 0.25 / 8.5, 4.0 / 8.5];
        for (w, e) in g.space().weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
        assert!((g.normalization() - 8.5).abs() < 1e-13);

        let g = gibbs_space(k(0.3, 0.5), 8, DEFAULT_MAX_CONFIGS).unwrap();
        assert!(normalization_gap(&g).unwrap() < 1e-10);
    }

    #[test]
    fn gibbs_space_caps() {
        assert!(matches!(gibbs_space(k(0.0, 0.0), 17, usize::MAX), Err(Error::ResourceCap { .. })));
        assert!(matches!(gibbs_space(k(0.0, 0.0), 10, 512), Err(Error::ResourceCap { .. })));
        assert!(gibbs_space(k(0.0, 0.0), 9, 512).is_ok());
    }

    #[test]
    fn induced_partition_examples() {
        let g = gibbs_space(k(0.3, -0.2), 4, DEFAULT_MAX_CONFIGS).unwrap();
        let singles = Partition::from_labels(site_space(4).unwrap(), 0..4).unwrap();
        let p = induced_config_partition(&g, &singles, &MAJORITY).unwrap();
        assert_eq!(p, Partition::discrete(g.space().clone()));

        let g = gibbs_space(k(0.0, 0.0), 2, DEFAULT_MAX_CONFIGS).unwrap();
        let whole = Partition::trivial(site_space(2).unwrap());
        let p = induced_config_partition(&g, &whole, &MAJORITY).unwrap();
        assert_eq!(p.atom_probabilities().probabilities, vec![0.5, 0.5]);

        let g = gibbs_space(k(0.0, 0.0), 4, DEFAULT_MAX_CONFIGS).unwrap();
        let pairs = block_site_partition(&LatticeSpec::new(4, 2).unwrap(), 0).unwrap();
        let p = induced_config_partition(&g, &pairs, &MAJORITY).unwrap();
        assert_eq!(p.atom_probabilities().probabilities, vec![0.25; 4]);

        let gapped = Partition::from_labels(site_space(4).unwrap(), [0, 1, 0, 1]).unwrap();
        assert!(induced_config_partition(&g, &gapped, &MAJORITY).is_err());
    }

    #[test]
    fn zero_field_flow_entropies() {
        // oracle: exhaustive sum over the 2^8 configurations, block spins read off directly
        let oracle = |level: usize| -> f64 {
            let mut counts = std::collections::HashMap::new();
            for c in 0..256usize {
                let mut spins: Vec<i8> = (0..8).map(|i| if (c >> i) & 1 == 1 { 1 } else { -1 }).collect();
                for _ in 0..=level {
                    spins = spins.chunks(2).map(|b| if b[0] + b[1] != 0 { b[0].signum() } else { b[0] }).collect();
                }
                *counts.entry(spins).or_insert(0usize) += 1;
            }
            -counts.values().map(|&n| n as f64 / 256.0).map(|p| p * p.log2()).sum::<f64>()
        };
        let setup = FlowSetup::new(k(0.0, 0.0), 8, 2, 3, &MAJORITY);
        let flow = rg_entropy_flow(&setup, &LimitPointConfig::default()).unwrap();
        let expected: Vec<f64> = (0..3).map(oracle).collect();
        assert_eq!(expected, vec![4.0, 2.0, 1.0]);
        assert_eq!(flow.entropies(), expected);
        assert_eq!(flow.coarse_verdict.status, LimitStatus::Refuted);
        assert_eq!(flow.refinement.direction(), FlowDirection::Refinement);
    }

    #[test]
    fn frozen_chain_flow() {
        let setup = FlowSetup::new(k(0.0, 5.0), 8, 2, 3, &MAJORITY);
        let flow = rg_entropy_flow(&setup, &LimitPointConfig::default()).unwrap();
        for h in flow.entropies() {
            assert!((h - 1.0).abs() < 1e-3, "{h}");
        }
    }

    #[test]
    fn single_level_is_a_plateau() {
        let setup = FlowSetup::new(k(0.2, 0.4), 8, 2, 1, &MAJORITY);
        let flow = rg_entropy_flow(&setup, &LimitPointConfig::default()).unwrap();
        assert_eq!(flow.levels.len(), 1);
        assert_eq!(flow.coarse_verdict.status, LimitStatus::Witnessed);
        assert_eq!(flow.refinement_verdict.witness_index, Some(0));
    }

    #[test]
    fn iterated_partitions_are_functorial() {
        let g = gibbs_space(k(0.4, -0.7), 8, DEFAULT_MAX_CONFIGS).unwrap();
        let spec = LatticeSpec::new(8, 2).unwrap();
        for rule in [MAJORITY, MajorityRule { tie: TieBreak::Up }] {
            let parts: Vec<_> = (0..3)
                .map(|lv| hierarchical_config_partition(&g, &spec, lv, &rule).unwrap())
                .collect();
            assert!(is_coarsening(&parts[1], &parts[0]).unwrap());
            assert!(is_coarsening(&parts[2], &parts[1]).unwrap());
        }
    }

    #[test]
    fn reversed_flow_refines() {
        let setup = FlowSetup::new(k(0.0, 0.0), 8, 2, 3, &MAJORITY);
        let rev = reversed_refinement_flow(&setup).unwrap();
        assert_eq!(rev.direction(), FlowDirection::Refinement);
        assert_eq!(rev.entropy_sequence(3).unwrap(), vec![1.0, 2.0, 4.0]);
        let deep = FlowSetup::new(k(0.0, 0.0), 8, 2, 4, &MAJORITY);
        assert!(reversed_refinement_flow(&deep).is_err());
    }
}
