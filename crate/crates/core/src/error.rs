use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero dimension vector is not a root")]
    ZeroVector,

    #[error("invalid canonical decomposition: summand {summand} is not a Schur root")]
    InvalidCanDec { summand: String },

    #[error("ambiguous split: {reason}")]
    AmbiguousSplit { reason: String },

    #[error("inconclusive after {iterations} iterations (imbalance {imbalance:.3e}, log norm ratio {log_norm_ratio:.3e})")]
    Inconclusive {
        iterations: usize,
        imbalance: f64,
        log_norm_ratio: f64,
    },

    #[error("subset enumeration over q = {q} arms exceeds the limit of {limit}")]
    EnumerationLimit { q: usize, limit: usize },

    #[error("witness has weight {weight} <= 0 and cannot destabilize")]
    NoDestabilizer { weight: i64 },

    #[error("witness is not a subrepresentation (relative residual {residual:.3e})")]
    NotASubrepresentation { residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate sample: first update matrix has rank {rank} < {dim}")]
    DegenerateSample { rank: usize, dim: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
