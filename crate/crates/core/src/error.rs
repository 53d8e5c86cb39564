use thiserror::Error;

use crate::algebra::MultiIndex;

/// Errors surfaced by the engine and its supporting modules.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} is not present in the state vector")]
    MissingMode(i32),

    #[error("series belong to different spectral models")]
    ModelMismatch,

    #[error("mode {mode} (Re alpha = {re}) falls in a forbidden spectral band")]
    UnclassifiableMode { mode: i32, re: String },

    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("update solve requires a nonzero resonance exponent")]
    ZeroDivisor,

    #[error("small divisor: |Re mu| <= mu_tilde for eliminable term q={q}, j={j}, mu={mu}")]
    SmallDivisor { q: MultiIndex, j: i32, mu: String },

    #[error("residual carries a degree-{degree} term below the expected order {order}")]
    OrderViolation { degree: u32, order: u32 },

    #[error("recomputed residual of order {order} still has a degree-{degree} term (internal consistency failure)")]
    ResidualOrderViolation { degree: u32, order: u32 },

    #[error("gap condition violated: {0}")]
    GapViolation(String),

    #[error("nonlinearity is not quadratic convolution type: {0}")]
    NotQuadraticConvolution(String),

    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("trajectory left the trust domain D_mu at t = {t} (tilde norm {norm})")]
    InsideViolation { t: f64, norm: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
