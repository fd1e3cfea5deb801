use thiserror::Error;

/// Errors raised by the engine.
///
/// The variants split into two families: contract violations on shapes and
/// arguments, and problems with persisted data (weight files, token files).
/// [`Error::is_data_error`] tells them apart for callers that map errors to
/// process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument to {op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },

    #[error("token id {id} at position {pos} is outside vocabulary of size {vocab}")]
    VocabOverflow { id: usize, pos: usize, vocab: usize },

    #[error("missing tensor '{0}' in weight store")]
    MissingTensor(String),

    #[error("slot '{slot}' aliases unknown storage '{storage}'")]
    DanglingAlias { slot: String, storage: String },

    #[error("weights do not match config: {0}")]
    ConfigMismatch(String),

    #[error("unknown preset '{0}' (expected vits-base-shaped, fly-tts or mini-fly-tts)")]
    UnknownPreset(String),

    #[error("weight file format error: {0}")]
    Format(String),

    #[error("token file error: {0}")]
    TokenParse(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("attention row {row} has every key masked")]
    FullyMasked { row: usize },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("wav encoding failed: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub(crate) fn invalid(op: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidArgument { op, detail: detail.into() }
    }

    /// True for errors caused by malformed or inconsistent input data rather
    /// than API misuse.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::TokenParse(_)
                | Error::Checksum { .. }
                | Error::MissingTensor(_)
                | Error::DanglingAlias { .. }
                | Error::ConfigMismatch(_)
                | Error::VocabOverflow { .. }
                | Error::Io(_)
                | Error::Wav(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
