use thiserror::Error;

/// Errors raised while building models, sampling, or reading/writing artifacts.
#[derive(Debug, Error)]
pub enum GcarError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),

    #[error("edge endpoint `{0}` is not a known node")]
    UnknownEndpoint(String),

    #[error("edge ({0}, {1}) has nonpositive weight {2}")]
    NonPositiveWeight(String, String, f64),

    #[error("self-loop on node `{0}`")]
    SelfLoop(String),

    #[error("isolated node with d = 0: `{0}` has no neighbors (singular precision matrix)")]
    IsolatedWithZeroD(String),

    #[error("augmentation constant d must be finite and nonnegative, got {0}")]
    InvalidD(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eta rejection sampler exceeded {0} rejections (a = {1:e}, J = {2})")]
    RejectionBudget(usize, f64, usize),

    #[error("chain {chain} aborted: {source}")]
    ChainAborted {
        chain: usize,
        #[source]
        source: Box<GcarError>,
    },

    #[error("sample store is empty")]
    EmptyStore,

    #[error("sample store holds `{found}` draws, expected `{expected}`")]
    WrongVariant { expected: String, found: String },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("problem too large for exact enumeration: J = {0} (max {1})")]
    TooLarge(usize, usize),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("corrupt store: {0}")]
    CorruptStore(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GcarError> = std::result::Result<T, E>;

impl GcarError {
    /// Whether this error stems from invalid model input (as opposed to
    /// numerical trouble or I/O).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            GcarError::DuplicateId(_)
                | GcarError::UnknownEndpoint(_)
                | GcarError::NonPositiveWeight(..)
                | GcarError::SelfLoop(_)
                | GcarError::IsolatedWithZeroD(_)
                | GcarError::InvalidD(_)
                | GcarError::DimensionMismatch { .. }
                | GcarError::InvalidParameter(_)
                | GcarError::TooLarge(..)
                | GcarError::Parse { .. }
                | GcarError::IdMismatch(_)
                | GcarError::WrongVariant { .. }
                | GcarError::ZeroVariance(_)
        )
    }
}
