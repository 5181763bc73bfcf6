//! Learning compact pronunciation lexicons from acoustic evidence.
//!
//! Candidates from several sources (G2P, phonetic decoding, a reference
//! lexicon) are scored against per-utterance pronunciation likelihoods. EM
//! fits each word's pronunciation probabilities, and a greedy loop removes the
//! candidate whose removal costs the least data likelihood until every
//! remaining candidate clears a source-dependent threshold.
//!
//! The crate is `no_std` and needs only `alloc`; file formats and the command
//! line live in the `lexlearn` crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod config;
pub mod edit_distance;
pub mod em;
pub mod error;
pub mod evidence;
pub mod lexicon;
pub mod oracle;
pub mod selector;
pub mod sim;

pub use config::{EmConfig, PerSource, SelectionConfig};
pub use em::{log_likelihood, run_em, run_em_uniform, EmResult, PronModel};
pub use error::{Error, Result};
pub use evidence::{
    average_posteriors, filter_by_relative_frequency, merge_candidates, prune_top_k, AlignmentCounts, EvidenceBuilder,
    EvidenceMatrix,
};
pub use lexicon::{CandidateSet, Lexicon, LexiconEntry, Phone, Pronunciation, Source};
pub use selector::{greedy_select, likelihood_reduction, score, CandidateScore, SelectionStep, SelectionTrace};
