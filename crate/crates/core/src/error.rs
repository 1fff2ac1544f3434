use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integrand is not finite at v = {0}")]
    NonFiniteIntegrand(f64),
    #[error("noise characteristic function underflows at u = {0}")]
    NoiseCfUnderflow(f64),
    #[error("delta(m) overflows at m = {m}; largest feasible m is {largest_feasible}")]
    DeltaOverflow { m: u32, largest_feasible: u32 },
    #[error("no admissible model for n = {0}")]
    NoAdmissibleModel(usize),
    #[error("no admissible restricted model for n = {n}: {reason}")]
    NoAdmissibleRestrictedModel { n: usize, reason: String },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
