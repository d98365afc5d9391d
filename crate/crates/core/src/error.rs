use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector norm below 1e-12")]
    ZeroVector,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("empty input")]
    EmptyInput,
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("label index {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("class {0} is already stored")]
    DuplicateClass(u32),
    #[error("class {class} has {got} support samples, expected {expected}")]
    ShotCountMismatch { class: u32, expected: usize, got: usize },
    #[error("memory holds no prototypes")]
    EmptyMemory,
    #[error("class {0} is not stored")]
    UnknownClass(u32),
    #[error("class {0} has no samples")]
    EmptyClass(u32),
    #[error("evaluation label {0} has not been learned yet")]
    UnknownLabel(u32),
    #[error("evaluation set is empty")]
    EmptyEvaluation,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset does not cover the schedule: {0}")]
    InsufficientData(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("file truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("{extra} unexpected trailing bytes after the declared records")]
    TrailingBytes { extra: u64 },
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("serialization error: {0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable category, one per variant.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroVector => "zero_vector",
            Error::NonFinite => "non_finite",
            Error::EmptyInput => "empty_input",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::DuplicateClass(_) => "duplicate_class",
            Error::ShotCountMismatch { .. } => "shot_count_mismatch",
            Error::EmptyMemory => "empty_memory",
            Error::UnknownClass(_) => "unknown_class",
            Error::EmptyClass(_) => "empty_class",
            Error::UnknownLabel(_) => "unknown_label",
            Error::EmptyEvaluation => "empty_evaluation",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InsufficientData(_) => "insufficient_data",
            Error::BadMagic => "bad_magic",
            Error::VersionUnsupported(_) => "version_unsupported",
            Error::TruncatedFile { .. } => "truncated_file",
            Error::TrailingBytes { .. } => "trailing_bytes",
            Error::ConfigParse(_) => "config_parse",
            Error::Serialization(_) => "serialization",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for the category. Codes 1 and 2 are reserved for
    /// gradient-check failure and argument errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::DimensionMismatch { .. } => 10,
            Error::ZeroVector => 11,
            Error::NonFinite => 12,
            Error::EmptyInput => 13,
            Error::NonFiniteLoss { .. } => 14,
            Error::LabelOutOfRange { .. } => 15,
            Error::DuplicateClass(_) => 16,
            Error::ShotCountMismatch { .. } => 17,
            Error::EmptyMemory => 18,
            Error::UnknownClass(_) => 19,
            Error::EmptyClass(_) => 20,
            Error::UnknownLabel(_) => 21,
            Error::EmptyEvaluation => 22,
            Error::InvalidConfig(_) => 23,
            Error::InsufficientData(_) => 24,
            Error::BadMagic => 30,
            Error::VersionUnsupported(_) => 31,
            Error::TruncatedFile { .. } => 32,
            Error::TrailingBytes { .. } => 33,
            Error::ConfigParse(_) => 34,
            Error::Serialization(_) => 35,
            Error::Io(_) => 40,
        }
    }
}
