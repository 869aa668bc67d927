use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on shapes, signs or finiteness was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration `{parameter}`: {reason}")]
    Config { parameter: String, reason: String },

    /// Field content at the grid edge is large enough that a spectral shift would alias.
    #[error("edge energy along axis {axis}: edge/peak = {ratio:.3e} exceeds {limit:.1e}")]
    EdgeEnergy { axis: usize, ratio: f64, limit: f64 },

    #[error("truncation in {what}: {detail}")]
    Truncation { what: String, detail: String },

    #[error("sideband lobes overlap: delay / lobe width = {ratio:.2} (needs > {required})")]
    LobeOverlap { ratio: f64, required: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("zero total intensity: {0}")]
    ZeroTotal(String),

    #[error("binary format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(parameter: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            parameter: parameter.into(),
            reason: reason.into(),
        }
    }
}
