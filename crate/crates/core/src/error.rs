use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty time tuple")]
    EmptyTimeTuple,

    #[error("time outside I: {time} not in [0, {horizon}]")]
    TimeOutsideInterval { time: f64, horizon: f64 },

    #[error("kernel requires t < u (got t = {t}, u = {u})")]
    KernelTimeOrder { t: f64, u: f64 },

    #[error("time precedes pin: {time} <= start time {start}")]
    TimePrecedesPin { time: f64, start: f64 },

    #[error("non-finite integrand at node {node:?}")]
    NonFiniteIntegrand { node: Vec<f64> },

    #[error("tensor grid too large: {nodes} nodes exceeds {limit}")]
    TensorGridTooLarge { nodes: f64, limit: f64 },

    #[error("body exceeds declared bound: |f| = {value} > {bound}")]
    BoundExceeded { value: f64, bound: f64 },

    #[error("non-finite signed part: mass {mass} exceeds overflow guard {limit}")]
    NonFiniteSignedPart { mass: f64, limit: f64 },

    #[error("regularization must be positive (got {0})")]
    RegularizationNotPositive(f64),

    #[error("singular time: t = 0")]
    SingularTime,

    #[error("inadmissible potential: exponent {0} must exceed -1")]
    InadmissiblePotential(f64),

    #[error("negative argument {0} for real-order Bessel function")]
    NegativeArgument(f64),

    #[error("time ordering violated: {0}")]
    TimeOrdering(String),

    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteIntegrand { .. }
                | Error::NonFiniteSignedPart { .. }
                | Error::BoundExceeded { .. }
        )
    }
}
