use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A record could not be parsed. `line` is 1-based.
    #[error("{}:{line}: malformed record: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("unknown MWE type label `{0}`")]
    UnknownType(String),

    #[error("integrity check failed: expected digest {expected}, found {actual}")]
    Integrity { expected: String, actual: String },

    #[error("sentence `{sentence_id}`: dependency head cycle through tokens {cycle:?}")]
    HeadCycle {
        sentence_id: String,
        cycle: Vec<usize>,
    },

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unknown sentence id `{0}`")]
    UnknownSentence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("augmentation error: {0}")]
    Augment(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
