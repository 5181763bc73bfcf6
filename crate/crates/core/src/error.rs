use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid phone symbol {0:?}: must be non-empty and contain no whitespace")]
    InvalidPhone(String),

    #[error("pronunciation has no phones")]
    EmptyPronunciation,

    #[error("candidate set for word {0:?} is empty")]
    EmptyCandidateSet(String),

    #[error("word {word:?} has duplicate candidate {phones:?}")]
    DuplicateCandidate { word: String, phones: String },

    #[error("invalid probabilities for word {word:?}: {reason}")]
    InvalidProbabilities { word: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evidence for word {word:?}: {reason}")]
    InvalidEvidence { word: String, reason: String },

    #[error("posterior {value} for word {word:?} in utterance {utterance:?} is outside [0, 1]")]
    PosteriorOutOfRange {
        utterance: String,
        word: String,
        value: f64,
    },

    #[error("duplicate evidence for utterance {utterance:?}, word {word:?}, pronunciation {phones:?}")]
    DuplicateEvidence {
        utterance: String,
        word: String,
        phones: String,
    },

    #[error("evidence for word {word:?} references pronunciation {phones:?} absent from its candidates")]
    UnknownCandidate { word: String, phones: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("initial pronunciation model has a non-positive component at index {0}")]
    ZeroInitialProbability(usize),

    #[error("likelihood reduction needs at least two candidates")]
    SingleCandidate,

    #[error("alignment counts for word {0:?} are all zero")]
    AllCountsZero(String),

    #[error("word {0:?} has neither a G2P nor a reference candidate")]
    NoG2pOrReference(String),

    #[error("{count} candidates exceed the brute-force cap of {cap}")]
    TooManyCandidates { count: usize, cap: usize },

    #[error("simulation precondition failed for word {word:?}: {reason}")]
    Simulation { word: String, reason: String },

    #[error("vocabularies differ; symmetric difference (first 10): {0}")]
    VocabularyMismatch(String),
}
