use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("record length mismatch: expected {expected}, got {got}")]
    RecordLength { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sigma = 0 (weight {index:?}); probabilistic distance is undefined")]
    ZeroSigma { index: Option<usize> },

    #[error("no free weights left to cluster")]
    NoFreeWeights,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "codebook of order {omega} at precision 2^-{precision} would hold up to {projected} centers (cap {cap})"
    )]
    CodebookTooLarge {
        omega: u32,
        precision: u32,
        projected: u128,
        cap: usize,
    },

    #[error("fixing round {round} aborted: {reason}")]
    FixingAborted { round: usize, reason: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical aborts: divergence, or a clustering round that cannot finish.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::FixingAborted { .. }
                | Error::CodebookTooLarge { .. }
                | Error::ZeroSigma { .. }
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
