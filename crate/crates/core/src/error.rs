use std::fmt;

/// Errors shared by every module in the crate.
#[derive(Debug)]
pub enum Error {
    /// A parameter is outside its documented domain (zero block width,
    /// sparsity out of range, bad window length, ...).
    InvalidParameter(String),
    /// Input data does not match its own description (length mismatches,
    /// index out of bounds, unparseable manifests).
    MalformedInput(String),
    /// A ratio over unpruned bits was requested but the mask has none.
    UndefinedRatio,
    /// The trellis context `n_in * (n_s + 1)` exceeds the configured cap.
    ResourceLimit { context_bits: u32, cap: u32 },
    /// A serialized artifact failed validation (magic, truncation,
    /// out-of-range correction positions, ...).
    CorruptArtifact(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::MalformedInput(msg) => write!(f, "malformed input: {msg}"),
            Error::UndefinedRatio => write!(f, "undefined ratio: mask has no unpruned bits"),
            Error::ResourceLimit { context_bits, cap } => write!(
                f,
                "resource limit: trellis context n_in*(n_s+1) = {context_bits} bits exceeds cap of {cap}"
            ),
            Error::CorruptArtifact(msg) => write!(f, "corrupt artifact: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl Error {
    /// Short machine-readable tag, stable across messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::MalformedInput(_) => "malformed_input",
            Error::UndefinedRatio => "undefined_ratio",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::CorruptArtifact(_) => "corrupt_artifact",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
