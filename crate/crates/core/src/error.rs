use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("degenerate drive: epsilon must be positive, got {0}")]
    DegenerateDrive(f64),

    #[error("argument outside the function domain: {0}")]
    Domain(&'static str),

    #[error("series did not converge within {terms} terms (partial sum {partial:e})")]
    IterationLimit { terms: usize, partial: f64 },

    #[error("steady-state system is singular after normalization (degenerate parameters)")]
    Singular,

    #[error("truncation N={n} too small: P1[N]={tail:e} exceeds the tail tolerance, try N={suggested}")]
    TruncationTooSmall { n: usize, tail: f64, suggested: usize },

    #[error("required truncation exceeds the hard cap N={cap}")]
    TruncationCap { cap: usize },

    #[error("time step too large: trace drifted by {drift:e}")]
    StepTooLarge { drift: f64 },

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepExceedsLimit { dt: f64, limit: f64 },

    #[error("effective coupling g1 vanishes; the analytic distribution degenerates to the thermal-pump limit")]
    ThermalPumpLimit,

    #[error("quantity undefined at zero pump rate")]
    ZeroPump,

    #[error("superoperator dimension {dim} exceeds the memory cap {cap}")]
    MemoryCap { dim: usize, cap: usize },

    #[error("null-space iteration did not converge (residual {residual:e})")]
    NullSpaceNonConvergence { residual: f64 },

    #[error("steady state is not unique: the Liouvillian null space is degenerate")]
    DegenerateNullSpace,

    #[error("propagation became unstable at tau={tau}")]
    PropagationUnstable { tau: f64 },

    #[error("correlation has not decayed at the horizon (|g(T)|/|g(0)| = {ratio:e}); increase the horizon")]
    InsufficientDecay { ratio: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}
