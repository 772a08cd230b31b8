use thiserror::Error;

/// Every failure mode surfaced by the kernels, the runtime and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidShape: {0}")]
    InvalidShape(String),
    #[error("InvalidIndex: {0}")]
    InvalidIndex(String),
    #[error("Singular: zero pivot at index {0}")]
    Singular(usize),
    #[error("PivotBlockSingular: leading block singular at recursion level {0}")]
    PivotBlockSingular(usize),
    #[error("NotPositiveDefinite: non-positive pivot at index {0}")]
    NotPositiveDefinite(usize),
    #[error("UnsupportedScalar: {0}")]
    UnsupportedScalar(String),
    #[error("PreconditionViolated: {0}")]
    PreconditionViolated(String),
    #[error("ModelSingular: beta = {0} makes the closed form degenerate")]
    ModelSingular(f64),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("Parse: {0}")]
    Parse(String),
    #[error("NotExpandable: {0}")]
    NotExpandable(String),
    #[error("DuplicateWrite: {0}")]
    DuplicateWrite(String),
    #[error("Stalled: {0}")]
    Stalled(String),
    #[error("RootFailureUnsupported")]
    RootFailureUnsupported,
    #[error("TraceDecodeError: {0}")]
    TraceDecodeError(String),
    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    /// The bare variant name, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidShape(_) => "InvalidShape",
            Error::InvalidIndex(_) => "InvalidIndex",
            Error::Singular(_) => "Singular",
            Error::PivotBlockSingular(_) => "PivotBlockSingular",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::UnsupportedScalar(_) => "UnsupportedScalar",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::ModelSingular(_) => "ModelSingular",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse(_) => "Parse",
            Error::NotExpandable(_) => "NotExpandable",
            Error::DuplicateWrite(_) => "DuplicateWrite",
            Error::Stalled(_) => "Stalled",
            Error::RootFailureUnsupported => "RootFailureUnsupported",
            Error::TraceDecodeError(_) => "TraceDecodeError",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
