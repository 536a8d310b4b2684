use thiserror::Error;

/// Errors raised by constructors and operations in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{ids} point ids but {weights} weights")]
    LengthMismatch { ids: usize, weights: usize },
    #[error("weight of point {index} is negative or not finite")]
    InvalidWeight { index: usize },
    #[error("duplicate point id {0:?}")]
    DuplicateId(String),
    #[error("total mass is zero")]
    ZeroMass,
    #[error("unnormalized: weights sum to {total}")]
    Unnormalized { total: f64 },
    #[error("unknown point id {0:?}")]
    UnknownId(String),
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("partition has an empty atom")]
    EmptyAtom,
    #[error("point {0} appears in more than one atom")]
    OverlappingAtoms(usize),
    #[error("point {0} has positive weight but lies in no atom")]
    UncoveredPoint(usize),
    #[error("operands live on different probability spaces")]
    SpaceMismatch,
    #[error("flow is empty")]
    EmptyFlow,
    #[error("flow direction violated between elements {index} and {}", index + 1)]
    DirectionViolated { index: usize },
    #[error("generator has no materialization horizon")]
    UnboundedFlow,
    #[error("horizon {horizon} exceeds the {available} materialized elements")]
    HorizonTooLarge { horizon: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceCap { what: &'static str, needed: u128, cap: u128 },
    #[error("not a permutation: {0}")]
    NotPermutation(String),
    #[error("map does not preserve the measure at point {0}")]
    NotMeasurePreserving(usize),
    #[error("probabilities must be nonnegative and sum to 1")]
    InvalidDistribution,
    #[error("distribution is not stationary for the transition matrix (residual {residual})")]
    NotStationary { residual: f64 },
    #[error("coupling magnitude exceeds the overflow cap of 300")]
    CouplingOverflow,
    #[error("numeric overflow in {0}")]
    Overflow(&'static str),
    #[error("family of partitions is empty")]
    EmptyFamily,
}

pub type Result<T> = std::result::Result<T, Error>;
