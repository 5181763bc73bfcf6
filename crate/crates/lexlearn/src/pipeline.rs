//! Whole-lexicon drivers around the per-word algorithms.
//!
//! Words are processed independently on a worker pool of `jobs` threads;
//! results always come back in sorted word order, so outputs do not depend on
//! the thread count.

use std::collections::BTreeMap;

use lexlearn_core::baselines::{g2p_one_best, pp_select};
use lexlearn_core::evidence::top_k_indices;
use lexlearn_core::{
    filter_by_relative_frequency, greedy_select, merge_candidates, AlignmentCounts, CandidateSet, EvidenceMatrix,
    Lexicon, LexiconEntry, Pronunciation, SelectionConfig, SelectionTrace, Source,
};
use rayon::prelude::*;

use crate::error::PipelineError;

/// What happened to one word.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Greedy selection ran; the full trace is attached.
    Selected(SelectionTrace),
    /// A baseline pruned the word.
    Pruned,
    /// No evidence: the fallback rule picked the pronunciations.
    Bypassed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordResult {
    pub word: String,
    pub candidates_in: usize,
    pub kept: CandidateSet,
    pub probs: Option<Vec<f64>>,
    pub outcome: Outcome,
}

/// Runs `f` on every lexicon word on a pool of `jobs` threads and returns the
/// results in word order. The first error in word order wins.
fn for_each_word<F>(lex: &Lexicon, jobs: usize, f: F) -> Result<Vec<WordResult>, PipelineError>
where
    F: Fn(&str, &LexiconEntry) -> Result<WordResult, PipelineError> + Sync,
{
    if jobs == 0 {
        return Err(PipelineError::ZeroJobs);
    }
    let entries: Vec<(&str, &LexiconEntry)> = lex.iter().collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<_> = pool.install(|| entries.par_iter().map(|(w, e)| f(w, e)).collect());
    results.into_iter().collect()
}

fn check_vocabulary(lex: &Lexicon, evidence: &BTreeMap<String, EvidenceMatrix>) -> Result<(), PipelineError> {
    match evidence.keys().find(|w| !lex.contains_word(w)) {
        Some(w) => Err(PipelineError::UnknownWord(w.clone())),
        None => Ok(()),
    }
}

/// Pronunciations kept for a word that has no evidence: its reference
/// candidates, else its first G2P candidate, else its first candidate.
pub fn fallback(set: &CandidateSet) -> CandidateSet {
    let c = set.candidates();
    let refs: Vec<usize> = (0..c.len()).filter(|&i| c[i].source() == Source::Reference).collect();
    let keep = if !refs.is_empty() {
        refs
    } else {
        vec![c.iter().position(|p| p.source() == Source::G2P).unwrap_or(0)]
    };
    set.subset(&keep).expect("indices come from a non-empty set")
}

fn bypass(word: &str, entry: &LexiconEntry) -> WordResult {
    let kept = fallback(&entry.candidates);
    let n = kept.len();
    WordResult {
        word: word.to_string(),
        candidates_in: entry.candidates.len(),
        kept,
        probs: Some(vec![1.0 / n as f64; n]),
        outcome: Outcome::Bypassed,
    }
}

/// Aligns a word's evidence to its candidates and keeps the `top_k` columns
/// with the highest average posterior. Returns the pruned matrix and the
/// source of each remaining column.
fn prepare(
    entry: &LexiconEntry,
    ev: &EvidenceMatrix,
    top_k: usize,
) -> Result<(EvidenceMatrix, Vec<Source>), PipelineError> {
    let aligned = ev.align_to(&entry.candidates)?;
    let keep = top_k_indices(&aligned, top_k);
    let pruned = aligned.select_columns(&keep)?;
    let all = entry.candidates.sources();
    Ok((pruned, keep.iter().map(|&i| all[i]).collect()))
}

/// Top-K pruning followed by greedy selection for every word with evidence;
/// the fallback rule for the rest.
pub fn select_lexicon(
    lex: &Lexicon,
    evidence: &BTreeMap<String, EvidenceMatrix>,
    cfg: &SelectionConfig,
    jobs: usize,
) -> Result<Vec<WordResult>, PipelineError> {
    cfg.validate()?;
    check_vocabulary(lex, evidence)?;
    for_each_word(lex, jobs, |word, entry| {
        let Some(ev) = evidence.get(word) else {
            return Ok(bypass(word, entry));
        };
        let (pruned, sources) = prepare(entry, ev, cfg.top_k)?;
        let trace = greedy_select(&pruned, &sources, cfg)?;
        Ok(WordResult {
            word: word.to_string(),
            candidates_in: entry.candidates.len(),
            kept: trace.final_set.clone(),
            probs: Some(trace.final_theta.as_slice().to_vec()),
            outcome: Outcome::Selected(trace),
        })
    })
}

/// Max-normalized probability thresholding after top-K pruning. Kept
/// candidates carry their EM probabilities renormalized over the kept set.
pub fn pp_lexicon(
    lex: &Lexicon,
    evidence: &BTreeMap<String, EvidenceMatrix>,
    cfg: &SelectionConfig,
    threshold: f64,
    jobs: usize,
) -> Result<Vec<WordResult>, PipelineError> {
    cfg.validate()?;
    check_vocabulary(lex, evidence)?;
    for_each_word(lex, jobs, |word, entry| {
        let Some(ev) = evidence.get(word) else {
            return Ok(bypass(word, entry));
        };
        let (pruned, sources) = prepare(entry, ev, cfg.top_k)?;
        let sel = pp_select(&pruned, &sources, threshold, &cfg.em)?;
        let theta = sel.theta_star.as_slice();
        let mass: f64 = sel.kept_indices.iter().map(|&i| theta[i]).sum();
        Ok(WordResult {
            word: word.to_string(),
            candidates_in: entry.candidates.len(),
            kept: sel.kept,
            probs: Some(sel.kept_indices.iter().map(|&i| theta[i] / mass).collect()),
            outcome: Outcome::Pruned,
        })
    })
}

/// First G2P candidate plus reference candidates per word; no probabilities.
pub fn g2p1best_lexicon(lex: &Lexicon) -> Result<Vec<WordResult>, PipelineError> {
    let pruned = g2p_one_best(lex)?;
    Ok(pruned
        .iter()
        .map(|(word, entry)| WordResult {
            word: word.to_string(),
            candidates_in: lex.candidates(word).map_or(0, CandidateSet::len),
            kept: entry.candidates.clone(),
            probs: None,
            outcome: Outcome::Pruned,
        })
        .collect())
}

/// Assembles the output lexicon. Probabilities are attached only when every
/// word has them.
pub fn to_lexicon(results: &[WordResult]) -> Result<Lexicon, PipelineError> {
    let mut lex = Lexicon::new();
    let all_probs = results.iter().all(|r| r.probs.is_some());
    for r in results {
        match (&r.probs, all_probs) {
            (Some(p), true) => lex.insert_with_probs(r.kept.clone(), p.clone())?,
            _ => lex.insert(r.kept.clone()),
        }
    }
    Ok(lex)
}

/// Phonetic-decoding candidates from alignment counts, word by word, most
/// frequent first.
pub fn pd_candidates(
    counts: &[AlignmentCounts],
    threshold: f64,
) -> Result<Vec<(String, Pronunciation)>, PipelineError> {
    let mut out = Vec::new();
    for c in counts {
        for p in filter_by_relative_frequency(c, threshold)? {
            out.push((c.word.clone(), p));
        }
    }
    Ok(out)
}

/// Builds the combined candidate lexicon from any subset of the three inputs.
pub fn combine(
    g2p: Option<&Lexicon>,
    reference: Option<&Lexicon>,
    counts: &[AlignmentCounts],
    rel_freq_threshold: f64,
) -> Result<Lexicon, PipelineError> {
    let empty = Lexicon::new();
    let pd = pd_candidates(counts, rel_freq_threshold)?;
    Ok(merge_candidates(
        g2p.unwrap_or(&empty),
        &pd,
        reference.unwrap_or(&empty),
    ))
}
