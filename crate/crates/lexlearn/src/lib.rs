//! File formats, whole-lexicon pipeline drivers and the `lexlearn` command
//! line built on [`lexlearn_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;

pub use error::{FormatError, PipelineError};
pub use lexlearn_core as core;
