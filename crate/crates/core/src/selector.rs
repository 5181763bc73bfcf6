//! Likelihood-reduction scoring and greedy pronunciation pruning.
//!
//! The reduction of a candidate `b` is `dL_b = L* - L*_b`, where `L*` is the
//! EM optimum on the current set and `L*_b` the optimum with `b` removed. Its
//! score is
//!
//! ```text
//! q_b = max(dL_b, 0) / (M_w + beta_s) + alpha_s * ln(delta)
//! ```
//!
//! with `s` the candidate's source. Since every cell is at least `delta`,
//! `dL_b / M_w` can never exceed `-ln(delta)`, which is what makes
//! `T_s = -alpha_s ln(delta)` an interpretable threshold. The greedy loop
//! removes the lowest-scoring candidate until every score is non-negative.

use alloc::string::String;
use alloc::vec::Vec;

use crate::config::{EmConfig, SelectionConfig};
use crate::em::{run_em_uniform, EmResult, PronModel};
use crate::error::{Error, Result};
use crate::evidence::EvidenceMatrix;
use crate::lexicon::{phones_to_string, CandidateSet, Phone, Pronunciation, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub candidate: Pronunciation,
    /// `L* - L*_b` as returned by [`reductions`].
    pub delta_l: f64,
    /// `delta_l / M_w`.
    pub per_utt_delta_l: f64,
    pub score: f64,
}

/// One removal performed by the greedy loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub removed: Pronunciation,
    pub score: f64,
    /// Set size after the removal.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub word: String,
    pub steps: Vec<SelectionStep>,
    pub final_set: CandidateSet,
    pub final_theta: PronModel,
    /// Score of each survivor from the last round it was scored in;
    /// `+inf` for a word that started with a single candidate.
    pub final_scores: Vec<f64>,
    /// Optimal log-likelihood on the final set.
    pub log_likelihood: f64,
    /// True when pruning stopped only because one candidate was left and that
    /// candidate's own last score was negative.
    pub guard_triggered: bool,
}

/// Slack on the first-order test that decides a removed column carries no
/// weight at the full-set optimum.
pub const ZERO_WEIGHT_TOL: f64 = 1e-6;

/// Gradient of the mean log-likelihood along column `b`, evaluated at the
/// mixture `theta_rest` over the other columns (`rest` lists their indices).
/// At most 1 means adding `b` cannot raise the optimum: the objective is
/// concave, so the optimum without `b` is already optimal with it.
pub fn reentry_gradient(ev: &EvidenceMatrix, b: usize, rest: &[usize], theta_rest: &[f64]) -> f64 {
    let total: f64 = ev
        .rows()
        .map(|row| {
            let mix: f64 = rest.iter().zip(theta_rest).map(|(&c, &t)| row[c] * t).sum();
            row[b] / mix
        })
        .sum();
    total / ev.n_utterances() as f64
}

fn reduction_for(ev: &EvidenceMatrix, full: &EmResult, b: usize, em: &EmConfig) -> Result<f64> {
    let n = ev.n_candidates();
    let rest: Vec<usize> = (0..n).filter(|&c| c != b).collect();
    let without = run_em_uniform(&ev.select_columns(&rest)?, em)?;
    if reentry_gradient(ev, b, &rest, without.theta_star.as_slice()) <= 1.0 + ZERO_WEIGHT_TOL {
        return Ok(0.0);
    }
    // The full-set optimum is at least the subset optimum; a negative gap is EM
    // stopping short.
    Ok((full.log_likelihood - without.log_likelihood).max(0.0))
}

/// EM result on all of `ev` and the reduction `dL_b` for every column (at
/// least two). Reductions are exactly 0 for columns that pass the
/// [`reentry_gradient`] test and never negative.
pub fn reductions(ev: &EvidenceMatrix, em: &EmConfig) -> Result<(EmResult, Vec<f64>)> {
    let n = ev.n_candidates();
    if n < 2 {
        return Err(Error::SingleCandidate);
    }
    let full = run_em_uniform(ev, em)?;
    let out = (0..n)
        .map(|b| reduction_for(ev, &full, b, em))
        .collect::<Result<Vec<_>>>()?;
    Ok((full, out))
}

/// Total likelihood reduction `L* - L*_b` from removing column `b`, each side
/// optimized by EM from the uniform model.
pub fn likelihood_reduction(ev: &EvidenceMatrix, b: usize, em: &EmConfig) -> Result<f64> {
    let n = ev.n_candidates();
    if n < 2 {
        return Err(Error::SingleCandidate);
    }
    if b >= n {
        return Err(Error::DimensionMismatch { expected: n, actual: b });
    }
    let full = run_em_uniform(ev, em)?;
    reduction_for(ev, &full, b, em)
}

/// Smoothed, source-thresholded score. Negative reductions are clamped to zero.
pub fn score(delta_l: f64, m_w: usize, source: Source, cfg: &SelectionConfig) -> f64 {
    delta_l.max(0.0) / (m_w as f64 + cfg.beta.get(source)) + cfg.alpha.get(source) * libm::log(cfg.delta)
}

/// Scores every column of `ev` (at least two).
pub fn score_candidates(
    ev: &EvidenceMatrix,
    sources: &[Source],
    cfg: &SelectionConfig,
) -> Result<(EmResult, Vec<CandidateScore>)> {
    check_sources(ev, sources)?;
    let (full, dl) = reductions(ev, &cfg.em)?;
    let m_w = ev.n_utterances();
    let scores = dl
        .into_iter()
        .zip(ev.candidates())
        .zip(sources)
        .map(|((d, phones), &s)| {
            Ok(CandidateScore {
                candidate: Pronunciation::new(phones.clone(), s)?,
                delta_l: d,
                per_utt_delta_l: d / m_w as f64,
                score: score(d, m_w, s, cfg),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((full, scores))
}

fn check_sources(ev: &EvidenceMatrix, sources: &[Source]) -> Result<()> {
    if sources.len() != ev.n_candidates() {
        return Err(Error::DimensionMismatch {
            expected: ev.n_candidates(),
            actual: sources.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_distinct(ev: &EvidenceMatrix) -> Result<()> {
    let c = ev.candidates();
    for i in 0..c.len() {
        if c[..i].contains(&c[i]) {
            return Err(Error::DuplicateCandidate {
                word: ev.word().into(),
                phones: phones_to_string(&c[i]),
            });
        }
    }
    Ok(())
}

/// Index of the smallest score; exact ties go to the lexicographically
/// smaller phone sequence.
pub(crate) fn argmin_score(scores: &[f64], phones: &[&[Phone]]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] < scores[best] || (scores[i] == scores[best] && phones[i] < phones[best]) {
            best = i;
        }
    }
    best
}

/// Greedy pruning: repeatedly score the current set and drop the lowest
/// scorer while any score is negative. At least one candidate always remains.
pub fn greedy_select(ev: &EvidenceMatrix, sources: &[Source], cfg: &SelectionConfig) -> Result<SelectionTrace> {
    check_sources(ev, sources)?;
    check_distinct(ev)?;
    cfg.validate()?;

    let n = ev.n_candidates();
    let mut active: Vec<usize> = (0..n).collect();
    let mut last_score = alloc::vec![f64::INFINITY; n];
    let mut steps = Vec::new();

    let (final_em, guard_triggered) = loop {
        let sub = ev.select_columns(&active)?;
        if active.len() == 1 {
            let em = run_em_uniform(&sub, &cfg.em)?;
            break (em, !steps.is_empty() && last_score[active[0]] < 0.0);
        }
        let sub_sources: Vec<Source> = active.iter().map(|&c| sources[c]).collect();
        let (full, scores) = score_candidates(&sub, &sub_sources, cfg)?;
        for (&c, s) in active.iter().zip(&scores) {
            last_score[c] = s.score;
        }
        let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
        let phones: Vec<&[Phone]> = active.iter().map(|&c| ev.candidates()[c].as_slice()).collect();
        let worst = argmin_score(&values, &phones);
        if values[worst] >= 0.0 {
            break (full, false);
        }
        let removed = active.remove(worst);
        steps.push(SelectionStep {
            removed: Pronunciation::new(ev.candidates()[removed].clone(), sources[removed])?,
            score: values[worst],
            remaining: active.len(),
        });
    };

    let final_set = CandidateSet::new(
        ev.word(),
        active
            .iter()
            .map(|&c| Pronunciation::new(ev.candidates()[c].clone(), sources[c]))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(SelectionTrace {
        word: ev.word().into(),
        steps,
        final_set,
        final_theta: final_em.theta_star,
        final_scores: active.iter().map(|&c| last_score[c]).collect(),
        log_likelihood: final_em.log_likelihood,
        guard_triggered,
    })
}
