use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock index {n} does not fit below truncation N = {n_trunc}")]
    FockOutOfRange { n: usize, n_trunc: usize },

    #[error("truncation too small: tail mass {tail:.3e} beyond N = {n_trunc} exceeds leak tolerance {leak_tol:.3e}")]
    TruncationTooSmall { tail: f64, n_trunc: usize, leak_tol: f64 },

    #[error("state is not normalized: norm deviation {0:.3e}")]
    NotNormalized(f64),

    #[error("non-finite value in state at tau = {tau}")]
    NonFinite { tau: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expected {expected} active rungs, found {found}")]
    RungCount { expected: usize, found: usize },

    #[error("step size underflow at tau = {tau} (h = {h:.3e})")]
    StepUnderflow { tau: f64, h: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(u64),

    #[error("probability {prob:.3e} in the top Fock level exceeds leak tolerance at tau = {tau}")]
    Leak { tau: f64, prob: f64 },

    #[error("invariant {name} drifted by {drift:.3e} (limit {limit:.3e}) at tau = {tau}")]
    InvariantDrift { name: String, drift: f64, limit: f64, tau: f64 },

    #[error("oracle undefined: {0}")]
    OracleUndefined(String),

    #[error("trajectory separation left its working range ({separation:.3e}) at tau = {tau}")]
    Separation { separation: f64, tau: f64 },

    #[error("time series too short: need {needed}, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("operation requires {0}")]
    Unsupported(String),
}
