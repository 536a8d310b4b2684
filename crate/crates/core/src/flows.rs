//! Coarse-graining and refinement flows of partitions, and limit-point detection.
//!
//! A limit point of a flow is defined through the entropy pseudo-distance, so
//! it is a statement about the entropy sequence only. From finitely many
//! elements the detector can certify a plateau ([`LimitStatus::Witnessed`]),
//! certify uniform growth ([`LimitStatus::Refuted`]), or neither.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{is_coarsening, Partition};
use crate::scalar::Scalar;
use crate::space::{FiniteProbabilitySpace, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowDirection {
    /// `P_{n+1} ≤ P_n`.
    CoarseGraining,
    /// `P_n ≤ P_{n+1}`.
    Refinement,
    Unvalidated,
}

impl FlowDirection {
    pub fn reversed(self) -> Self {
        match self {
            Self::CoarseGraining => Self::Refinement,
            Self::Refinement => Self::CoarseGraining,
            Self::Unvalidated => Self::Unvalidated,
        }
    }
}

impl fmt::Display for FlowDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CoarseGraining => "coarse-graining",
            Self::Refinement => "refinement",
            Self::Unvalidated => "unvalidated",
        })
    }
}

/// A finite, materialized sequence of partitions of one space.
#[derive(Debug, Clone)]
pub struct PartitionFlow<T> {
    partitions: Vec<Partition<T>>,
    direction: FlowDirection,
}

impl<T: Scalar> PartialEq for PartitionFlow<T> {
    fn eq(&self, other: &Self) -> bool {
        self.direction == other.direction && self.partitions == other.partitions
    }
}

impl<T: Scalar> PartitionFlow<T> {
    /// Builds a flow and checks the direction invariant on every adjacent pair.
    pub fn new(partitions: Vec<Partition<T>>, direction: FlowDirection) -> Result<Self> {
        let first = partitions.first().ok_or(Error::EmptyFlow)?;
        if partitions.iter().any(|p| !p.same_space(first)) {
            return Err(Error::SpaceMismatch);
        }
        for (index, pair) in partitions.windows(2).enumerate() {
            let ok = match direction {
                FlowDirection::CoarseGraining => is_coarsening(&pair[1], &pair[0])?,
                FlowDirection::Refinement => is_coarsening(&pair[0], &pair[1])?,
                FlowDirection::Unvalidated => true,
            };
            if !ok {
                return Err(Error::DirectionViolated { index });
            }
        }
        Ok(Self { partitions, direction })
    }

    pub fn partitions(&self) -> &[Partition<T>] {
        &self.partitions
    }

    pub fn direction(&self) -> FlowDirection {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn space(&self) -> &Arc<FiniteProbabilitySpace<T>> {
        self.partitions[0].space()
    }

    /// Inverts the order and swaps coarse-graining with refinement.
    pub fn reverse(&self) -> Self {
        let mut partitions = self.partitions.clone();
        partitions.reverse();
        Self {
            partitions,
            direction: self.direction.reversed(),
        }
    }

    /// `H(P_n)` for `n < horizon`.
    ///
    /// Fails with [`Error::DirectionViolated`] if the sequence is not monotone
    /// in the direction of the flow (beyond [`DEFAULT_TOL`]).
    pub fn entropy_sequence(&self, horizon: usize) -> Result<Vec<T>> {
        if horizon > self.partitions.len() {
            return Err(Error::HorizonTooLarge {
                horizon,
                available: self.partitions.len(),
            });
        }
        let entropies: Vec<T> = self.partitions[..horizon].iter().map(Partition::entropy).collect();
        let tol = T::lit(DEFAULT_TOL);
        for (index, w) in entropies.windows(2).enumerate() {
            let broken = match self.direction {
                FlowDirection::Refinement => w[1] < w[0] - tol,
                FlowDirection::CoarseGraining => w[1] > w[0] + tol,
                FlowDirection::Unvalidated => false,
            };
            if broken {
                return Err(Error::DirectionViolated { index });
            }
        }
        Ok(entropies)
    }
}

type Generator<T> = Box<dyn Fn(usize) -> Result<Partition<T>> + Send + Sync>;

/// A flow given by its `n`-th element. It must be bounded by a horizon before
/// it can be materialized or reversed.
pub struct FlowGenerator<T> {
    generator: Generator<T>,
    direction: FlowDirection,
    horizon: Option<usize>,
}

impl<T: Scalar> FlowGenerator<T> {
    pub fn new(
        direction: FlowDirection,
        generator: impl Fn(usize) -> Result<Partition<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            generator: Box::new(generator),
            direction,
            horizon: None,
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn materialize(&self) -> Result<PartitionFlow<T>> {
        let horizon = self.horizon.ok_or(Error::UnboundedFlow)?;
        let partitions = (0..horizon).map(&self.generator).collect::<Result<Vec<_>>>()?;
        PartitionFlow::new(partitions, self.direction)
    }

    pub fn reverse(&self) -> Result<PartitionFlow<T>> {
        Ok(self.materialize()?.reverse())
    }
}

impl<T> fmt::Debug for FlowGenerator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowGenerator")
            .field("direction", &self.direction)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitStatus {
    Witnessed,
    Refuted,
    Inconclusive,
}

impl fmt::Display for LimitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Witnessed => "witnessed",
            Self::Refuted => "refuted",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitPointVerdict<T> {
    pub status: LimitStatus,
    /// First index of the certified plateau.
    pub witness_index: Option<usize>,
    /// Entropy spread (bits) over the plateau when witnessed, else over the final window.
    pub tail_spread: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPointConfig<T> {
    pub epsilon: T,
    pub window: usize,
    pub horizon: usize,
    /// Smallest per-step change that counts as uniform growth. Defaults to `epsilon`.
    pub min_increment: Option<T>,
    /// Entropy of an external target partition. Without one, any plateau value is accepted.
    pub target_entropy: Option<T>,
}

impl<T: Scalar> Default for LimitPointConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: T::lit(1e-9),
            window: 8,
            horizon: 64,
            min_increment: None,
            target_entropy: None,
        }
    }
}

impl<T: Scalar> LimitPointConfig<T> {
    pub fn new(epsilon: T, window: usize, horizon: usize) -> Self {
        Self {
            epsilon,
            window,
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter("window must be at least 2".into()));
        }
        if self.horizon < self.window {
            return Err(Error::InvalidParameter("horizon must be at least window".into()));
        }
        if let Some(m) = self.min_increment {
            if !(m > T::zero()) {
                return Err(Error::InvalidParameter("min_increment must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Runs the plateau detector on the entropy sequence of a flow.
///
/// A horizon beyond the materialized length is clamped to it, and the window
/// shrinks with it; a one-element flow is a trivial plateau.
pub fn detect_limit_point<T: Scalar>(
    flow: &PartitionFlow<T>,
    config: &LimitPointConfig<T>,
) -> Result<LimitPointVerdict<T>> {
    config.validate()?;
    let entropies = flow.entropy_sequence(config.horizon.min(flow.len()))?;
    detect_plateau(&entropies, config)
}

/// Like [`detect_limit_point`], measuring distance to an external target partition.
pub fn detect_limit_point_to<T: Scalar>(
    flow: &PartitionFlow<T>,
    target: &Partition<T>,
    config: &LimitPointConfig<T>,
) -> Result<LimitPointVerdict<T>> {
    if !target.same_space(&flow.partitions[0]) {
        return Err(Error::SpaceMismatch);
    }
    let config = LimitPointConfig {
        target_entropy: Some(target.entropy()),
        ..*config
    };
    detect_limit_point(flow, &config)
}

/// Plateau detection on a raw entropy sequence.
pub fn detect_plateau<T: Scalar>(
    entropies: &[T],
    config: &LimitPointConfig<T>,
) -> Result<LimitPointVerdict<T>> {
    config.validate()?;
    let len = config.horizon.min(entropies.len());
    if len == 0 {
        return Err(Error::EmptyFlow);
    }
    let seq = &entropies[..len];
    let window = config.window.min(len);
    let eps = config.epsilon;

    let spread_of = |tail: &[T]| -> T {
        match config.target_entropy {
            Some(target) => tail
                .iter()
                .map(|&h| (h - target).abs())
                .fold(T::zero(), T::max),
            None => {
                let (lo, hi) = tail
                    .iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &h| (lo.min(h), hi.max(h)));
                hi - lo
            }
        }
    };

    // the tail spread only grows as the start moves left, so scan from the end
    let mut start = len;
    while start > 0 && spread_of(&seq[start - 1..]) < eps {
        start -= 1;
    }
    if len - start >= window {
        return Ok(LimitPointVerdict {
            status: LimitStatus::Witnessed,
            witness_index: Some(start),
            tail_spread: spread_of(&seq[start..]),
        });
    }

    let tail_spread = spread_of(&seq[len - window..]);
    let min_step = config.min_increment.unwrap_or(eps);
    let steps: Vec<T> = seq.windows(2).map(|w| w[1] - w[0]).collect();
    let uniform_growth = !steps.is_empty()
        && (steps.iter().all(|&d| d >= min_step) || steps.iter().all(|&d| d <= -min_step));
    let status = if uniform_growth {
        LimitStatus::Refuted
    } else {
        LimitStatus::Inconclusive
    };
    Ok(LimitPointVerdict {
        status,
        witness_index: None,
        tail_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type Space = FiniteProbabilitySpace<f64>;

    fn blocks(space: &Arc<Space>, size: usize) -> Partition<f64> {
        Partition::from_labels(space.clone(), (0..space.len()).map(|p| p / size)).unwrap()
    }

    fn block_refinement(space: &Arc<Space>) -> PartitionFlow<f64> {
        let parts = [8, 4, 2, 1].iter().map(|&s| blocks(space, s)).collect();
        PartitionFlow::new(parts, FlowDirection::Refinement).unwrap()
    }

    #[test]
    fn reverse_swaps_direction_and_order() {
        let s = Arc::new(Space::uniform(8).unwrap());
        let flow = block_refinement(&s);
        let rev = flow.reverse();
        assert_eq!(rev.direction(), FlowDirection::CoarseGraining);
        assert_eq!(rev.partitions()[0], blocks(&s, 1));
        // the reversed flow satisfies the coarse-graining invariant
        PartitionFlow::new(rev.partitions().to_vec(), FlowDirection::CoarseGraining).unwrap();
        assert_eq!(rev.reverse(), flow);

        let single = PartitionFlow::new(vec![blocks(&s, 2)], FlowDirection::Refinement).unwrap();
        assert_eq!(single.reverse().partitions(), single.partitions());
    }

    #[test]
    fn entropy_sequences() {
        let s = Arc::new(Space::uniform(8).unwrap());
        let flow = block_refinement(&s);
        assert_eq!(flow.entropy_sequence(4).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(flow.reverse().entropy_sequence(4).unwrap(), vec![3.0, 2.0, 1.0, 0.0]);
        assert!(matches!(flow.entropy_sequence(5), Err(Error::HorizonTooLarge { .. })));

        let p = blocks(&s, 2);
        let constant = PartitionFlow::new(vec![p.clone(), p.clone(), p.clone()], FlowDirection::Refinement).unwrap();
        assert_eq!(constant.entropy_sequence(3).unwrap(), vec![p.entropy(); 3]);
    }

    #[test]
    fn direction_violations_are_errors() {
        let s = Arc::new(Space::uniform(8).unwrap());
        let parts = vec![blocks(&s, 2), blocks(&s, 4)];
        assert_eq!(
            PartitionFlow::new(parts.clone(), FlowDirection::Refinement).unwrap_err(),
            Error::DirectionViolated { index: 0 }
        );
        // unvalidated flows accept anything, and reversal keeps them unvalidated
        let f = PartitionFlow::new(parts, FlowDirection::Unvalidated).unwrap();
        assert_eq!(f.reverse().direction(), FlowDirection::Unvalidated);
        assert_eq!(PartitionFlow::<f64>::new(vec![], FlowDirection::Refinement).unwrap_err(), Error::EmptyFlow);
    }

    #[test]
    fn generator_needs_horizon() {
        let s = Arc::new(Space::uniform(8).unwrap());
        let gen = FlowGenerator::new(FlowDirection::Refinement, move |n| {
            Ok(blocks(&s, 8 >> n.min(3)))
        });
        assert_eq!(gen.reverse().unwrap_err(), Error::UnboundedFlow);
        let gen = gen.with_horizon(6);
        let flow = gen.materialize().unwrap();
        assert_eq!(flow.entropy_sequence(6).unwrap(), vec![0.0, 1.0, 2.0, 3.0, 3.0, 3.0]);
        assert_eq!(gen.reverse().unwrap().direction(), FlowDirection::CoarseGraining);
    }

    #[test]
    fn plateau_by_construction_is_witnessed() {
        let seq = [0.0, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let v = detect_plateau(&seq, &LimitPointConfig::new(1e-9, 4, 10)).unwrap();
        assert_eq!(v.status, LimitStatus::Witnessed);
        assert!(v.witness_index.unwrap() <= 3);
        assert_eq!(v.tail_spread, 0.0);
    }

    #[test]
    fn unit_increments_are_refuted() {
        let seq: Vec<f64> = (1..=20).map(f64::from).collect();
        let v = detect_plateau(&seq, &LimitPointConfig::new(0.5, 8, 20)).unwrap();
        assert_eq!(v.status, LimitStatus::Refuted);
        assert_eq!(v.witness_index, None);
    }

    #[test]
    fn noisy_plateau_is_inconclusive() {
        let eps = 1e-3;
        let seq: Vec<f64> = (0..20).map(|n| 1.0 + if n % 2 == 0 { 0.0 } else { 2.0 * eps }).collect();
        let v = detect_plateau(&seq, &LimitPointConfig::new(eps, 4, 20)).unwrap();
        assert_eq!(v.status, LimitStatus::Inconclusive);
        assert!((v.tail_spread - 2.0 * eps).abs() < 1e-15);
    }

    #[test]
    fn target_entropy_is_respected() {
        let seq = [1.0; 10];
        let mut cfg = LimitPointConfig::new(1e-6, 4, 10);
        cfg.target_entropy = Some(1.0);
        assert_eq!(detect_plateau(&seq, &cfg).unwrap().status, LimitStatus::Witnessed);
        cfg.target_entropy = Some(2.0);
        let v = detect_plateau(&seq, &cfg).unwrap();
        assert_eq!(v.status, LimitStatus::Inconclusive);
        assert_eq!(v.tail_spread, 1.0);
    }

    #[test]
    fn detector_on_flows() {
        let s = Arc::new(Space::uniform(8).unwrap());
        let flow = block_refinement(&s);
        let cfg = LimitPointConfig::new(0.5, 2, 64);
        assert_eq!(detect_limit_point(&flow, &cfg).unwrap().status, LimitStatus::Refuted);
        let single = PartitionFlow::new(vec![blocks(&s, 2)], FlowDirection::Refinement).unwrap();
        let v = detect_limit_point(&single, &LimitPointConfig::default()).unwrap();
        assert_eq!((v.status, v.witness_index), (LimitStatus::Witnessed, Some(0)));
        let v = detect_limit_point_to(&flow, &blocks(&s, 1), &LimitPointConfig::new(0.5, 2, 64)).unwrap();
        assert_eq!(v.status, LimitStatus::Refuted);
    }

    #[test]
    fn invalid_detector_parameters() {
        let seq = [1.0; 4];
        assert!(detect_plateau(&seq, &LimitPointConfig::new(0.0, 2, 4)).is_err());
        assert!(detect_plateau(&seq, &LimitPointConfig::new(1e-9, 1, 4)).is_err());
        assert!(detect_plateau(&seq, &LimitPointConfig::new(1e-9, 5, 4)).is_err());
    }
}
