use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: must be strictly positive and finite")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("moment of order {order} is undefined for {family} with shape {shape}; lower s")]
    MomentUndefined {
        family: &'static str,
        shape: f64,
        order: u32,
    },

    #[error("iteration level s = {s} outside the supported range 1..={cap}")]
    LevelOutOfRange { s: u32, cap: u32 },

    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    QuadratureNotConverged {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("integrand returned a non-finite value {value} at t = {at}")]
    NonFiniteIntegrand { at: f64, value: f64 },

    #[error("rate indeterminate beyond truncation point: both tails underflow at x = {x}")]
    RateIndeterminate { x: f64 },

    #[error("function must be strictly positive but is {value} at x = {x}")]
    NonPositiveSample { x: f64, value: f64 },

    #[error("unsupported sign pattern {0:?}")]
    UnsupportedPattern(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("root finding failed: {0}")]
    RootNotFound(String),

    #[error("cannot parse distribution {input:?}: {reason}")]
    Parse { input: String, reason: String },
}
