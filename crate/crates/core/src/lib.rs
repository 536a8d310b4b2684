//! Partition entropy, information production rates of measure-preserving
//! maps, and block-spin renormalization of the one-dimensional Ising chain.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! default tolerances are tuned for.
//!
//! * [`space`] and [`partition`]: finite probability spaces, partitions, the
//!   coarse-graining order, joins, entropy `H(P)` and the pseudo-distance
//!   `d(P, Q) = |H(P) - H(Q)|`.
//! * [`flows`]: monotone flows of partitions and limit-point detection.
//! * [`dynamics`]: permutation systems and symbolic shifts, iterated joins,
//!   the rate `h(P, T)`, and the check that a join flow with a limit point has
//!   zero rate.
//! * [`ising`]: transfer matrix, partition function, and the decimation map.
//! * [`lattice`]: block partitions, the Gibbs measure by enumeration, and the
//!   renormalization flow of induced partitions.

pub mod dynamics;
pub mod error;
pub mod flows;
pub mod ising;
pub mod lattice;
pub mod partition;
pub mod scalar;
pub mod space;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Space = space::FiniteProbabilitySpace<f64>;
pub type Partition = partition::Partition<f64>;
pub type AtomDistribution = partition::AtomDistribution<f64>;
pub type PartitionFlow = flows::PartitionFlow<f64>;
pub type LimitPointVerdict = flows::LimitPointVerdict<f64>;
pub type LimitPointConfig = flows::LimitPointConfig<f64>;
pub type PermutationSystem = dynamics::PermutationSystem<f64>;
pub type SymbolicSystem = dynamics::SymbolicSystem<f64>;
pub type InfoRateReport = dynamics::InfoRateReport<f64>;
pub type RateOptions = dynamics::RateOptions<f64>;
pub type TheoremCheck = dynamics::TheoremCheck<f64>;
pub type CouplingVector = ising::CouplingVector<f64>;
pub type VVector = ising::VVector<f64>;
pub type TransferMatrix = ising::TransferMatrix<f64>;
pub type RgTrajectory = ising::RgTrajectory<f64>;
pub type IsingGibbsSpace = lattice::IsingGibbsSpace<f64>;

pub type Space32 = space::FiniteProbabilitySpace<f32>;
pub type Partition32 = partition::Partition<f32>;
pub type CouplingVector32 = ising::CouplingVector<f32>;
