//! Reference pruning strategies: max-normalized pronunciation-probability
//! thresholding and G2P 1-best.

use alloc::vec::Vec;

use crate::config::EmConfig;
use crate::em::{run_em_uniform, PronModel};
use crate::error::{Error, Result};
use crate::evidence::EvidenceMatrix;
use crate::lexicon::{CandidateSet, Lexicon, Pronunciation, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct PpSelection {
    pub kept: CandidateSet,
    /// Column indices of `kept` in the input matrix.
    pub kept_indices: Vec<usize>,
    /// EM estimate on the full candidate set.
    pub theta_star: PronModel,
}

/// Runs EM once on all columns, divides each probability by the largest and
/// keeps candidates whose normalized value reaches `threshold`. The argmax is
/// always kept.
pub fn pp_select(ev: &EvidenceMatrix, sources: &[Source], threshold: f64, em: &EmConfig) -> Result<PpSelection> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "pp threshold must lie in (0, 1], got {threshold}"
        )));
    }
    if sources.len() != ev.n_candidates() {
        return Err(Error::DimensionMismatch {
            expected: ev.n_candidates(),
            actual: sources.len(),
        });
    }
    let res = run_em_uniform(ev, em)?;
    let theta = res.theta_star.as_slice();
    let best = res.theta_star.argmax();
    let max = theta[best];
    let kept_indices: Vec<usize> = (0..theta.len())
        .filter(|&b| b == best || theta[b] / max >= threshold)
        .collect();
    let kept = CandidateSet::new(
        ev.word(),
        kept_indices
            .iter()
            .map(|&b| Pronunciation::new(ev.candidates()[b].clone(), sources[b]))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(PpSelection {
        kept,
        kept_indices,
        theta_star: res.theta_star,
    })
}

/// Keeps each word's reference candidates plus its first G2P candidate;
/// phonetic-decoding candidates are dropped. Candidate order is preserved.
pub fn g2p_one_best(lex: &Lexicon) -> Result<Lexicon> {
    let mut out = Lexicon::new();
    for (word, entry) in lex.iter() {
        let mut seen_g2p = false;
        let kept: Vec<Pronunciation> = entry
            .candidates
            .candidates()
            .iter()
            .filter(|c| match c.source() {
                Source::Reference => true,
                Source::G2P if !seen_g2p => {
                    seen_g2p = true;
                    true
                }
                _ => false,
            })
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::NoG2pOrReference(word.into()));
        }
        out.insert(CandidateSet::new(word, kept)?);
    }
    Ok(out)
}
