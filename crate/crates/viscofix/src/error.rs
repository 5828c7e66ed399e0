//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point contains a non-finite coordinate")]
    NonFinitePoint,
    #[error("convex set parameters define an empty set: {0}")]
    EmptySet(String),
    #[error("intersection projection did not reach tolerance {tol} in {sweeps} sweeps")]
    NonConvergence { sweeps: usize, tol: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("schedule has no known convergent difference series")]
    NotConvergent,
    #[error("schedule has a convergent sum; no rate of divergence exists")]
    NotDivergent,
    #[error("modulus value does not fit the requested integer width")]
    ModulusOverflow,
    #[error("epsilon must lie strictly inside (0, 2), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("schedule lacks the required modulus: {0}")]
    MissingModulus(&'static str),
    #[error("schedule is not decreasing: alpha_{index} < alpha_{} ", index + 1)]
    NotDecreasing { index: u64 },
    #[error("cannot derive bounds: C unbounded and no fixed point known")]
    Underdetermined,
    #[error("trace of length {len} is shorter than required index {needed}")]
    TraceTooShort { len: usize, needed: u64 },
    #[error("linear system singular while evaluating resolvent")]
    SingularSystem,
    #[error("inner solver exceeded its iteration cap {0}")]
    InnerBudgetExceeded(usize),
    #[error("alpha_{index}/mu = {value} lies outside (0, 1)")]
    ScheduleOutOfRange { index: u64, value: f64 },
    #[error("iterate left finite range at step {0}")]
    NonFiniteIterate(u64),
    #[error("gamma = {gamma} must be < eta/rho = {limit}")]
    GammaTooLarge { gamma: f64, limit: f64 },
    #[error("mu = {mu} must lie in (0, {limit})")]
    MuOutOfRange { mu: f64, limit: f64 },
    #[error("mapping failed its nonexpansiveness gate: estimated constant {0}")]
    NotNonexpansive(f64),
    #[error("contraction failed its gate: estimated constant {got} exceeds declared rho {rho}")]
    NotContraction { got: f64, rho: f64 },
    #[error("operator failed its monotonicity gate")]
    NotMonotone,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
