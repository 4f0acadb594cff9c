use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: i64, n: usize },
    #[error("interface {0} already has a converter attached")]
    AttachConflict(String),
    #[error("interface {0} does not exist in this world")]
    UnknownInterface(String),
    #[error("resources both answer ({0}, {1})")]
    CompositionConflict(String, String),
    #[error("event {0} is not environment-owned")]
    ForbiddenEvent(String),
    #[error("evaluation points must be nonzero and pairwise distinct")]
    BadPoints,
    #[error("repeated evaluation points")]
    SingularPoints,
    #[error("local decoding failed: {0}")]
    DecodeFailure(String),
    #[error("byzantine reconstruction ambiguous: {0}")]
    ReconstructionAmbiguous(String),
    #[error("hybrid index {index} exceeds bound {bound}")]
    IndexOutOfBounds { index: usize, bound: usize },
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
