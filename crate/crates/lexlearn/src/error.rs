use thiserror::Error;

/// Problem in a line-oriented input document. Line numbers are 1-based.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: lexlearn_core::Error,
    },
    #[error(transparent)]
    Core(#[from] lexlearn_core::Error),
    #[error("cannot serialize word {word:?}: {reason}")]
    Unserializable { word: String, reason: String },
}

impl FormatError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(line: usize, source: lexlearn_core::Error) -> Self {
        FormatError::Invalid { line, source }
    }
}

/// Failure in a pipeline stage.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] lexlearn_core::Error),
    #[error("evidence mentions word {0:?}, which is not in the lexicon")]
    UnknownWord(String),
    #[error("jobs must be at least 1")]
    ZeroJobs,
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
