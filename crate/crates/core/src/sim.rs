//! Synthetic acoustic evidence and lexicon scoring.
//!
//! The generative model is our own construction: for each simulated
//! utterance of a word a true baseform `b*` is drawn from the ground-truth
//! distribution, and every candidate `b` gets the raw likelihood
//!
//! ```text
//! exp(-kappa * lev(b, b*)) * exp(sigma * z_b),   z_b ~ N(0, 1)
//! ```
//!
//! where `lev` is the phone-level edit distance. The row is divided by its
//! maximum and floored at `delta`. Large `kappa` gives sharp rows (distinct
//! variants); small `kappa` gives soft rows (confusable variants).
//!
//! # Random stream
//!
//! Every word has its own ChaCha8 stream keyed by 32 bytes:
//! `seed` as little-endian u64, then the 64-bit FNV-1a hash of the word's UTF-8
//! bytes as little-endian u64, then 16 zero bytes (nonce and stream 0).
//! Draws are taken in this order, per utterance:
//!
//! 1. one uniform `u = (next_u64 >> 11) * 2^-53` picking `b*` as the first
//!    ground-truth pronunciation whose cumulative probability exceeds `u`
//!    (the last one if rounding leaves none);
//! 2. only when `sigma > 0`, one standard normal per candidate in column order,
//!    by Box-Muller from two uniforms `u1, u2`:
//!    `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edit_distance::levenshtein;
use crate::error::{Error, Result};
use crate::evidence::EvidenceMatrix;
use crate::lexicon::{Lexicon, Phone};

/// A setting with optional per-word overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct PerWord<T> {
    pub default: T,
    pub per_word: BTreeMap<String, T>,
}

impl<T: Copy> PerWord<T> {
    pub fn uniform(value: T) -> Self {
        PerWord {
            default: value,
            per_word: BTreeMap::new(),
        }
    }

    pub fn for_word(&self, word: &str) -> T {
        self.per_word.get(word).copied().unwrap_or(self.default)
    }

    fn values(&self) -> impl Iterator<Item = T> + '_ {
        core::iter::once(self.default).chain(self.per_word.values().copied())
    }
}

/// Number of simulated utterances per word.
pub type UtteranceCounts = PerWord<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Likelihood decay per unit edit distance; may be `+inf`.
    pub confusability: PerWord<f64>,
    /// Standard deviation of the log-normal jitter.
    pub noise: f64,
    pub utterances: UtteranceCounts,
    pub seed: u64,
    pub delta: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            confusability: PerWord::uniform(4.0),
            noise: 0.1,
            utterances: UtteranceCounts::uniform(100),
            seed: 0,
            delta: 1e-5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.confusability.values().find(|k| k.is_nan() || *k < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "confusability must be non-negative, got {k}"
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.utterances.values().any(|n| n == 0) {
            return Err(Error::InvalidConfig("utterance counts must be positive".into()));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The per-word generator described in the module docs.
pub fn word_rng(seed: u64, word: &str) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a64(word.as_bytes()).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform01(rng);
    let u2 = uniform01(rng);
    libm::sqrt(-2.0 * libm::log(1.0 - u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// First index whose cumulative probability exceeds one uniform draw.
fn draw_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u = uniform01(rng);
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn kernel(kappa: f64, distance: usize) -> f64 {
    if distance == 0 {
        1.0
    } else {
        libm::exp(-kappa * distance as f64)
    }
}

/// Simulates evidence for every ground-truth word. Columns follow the word's
/// candidate order in `candidates`.
pub fn simulate_evidence(
    candidates: &Lexicon,
    truth: &Lexicon,
    cfg: &SimConfig,
) -> Result<BTreeMap<String, EvidenceMatrix>> {
    cfg.validate()?;
    let mut out = BTreeMap::new();
    for (word, t) in truth.iter() {
        let fail = |reason: String| Error::Simulation {
            word: word.to_string(),
            reason,
        };
        let probs = t
            .probs
            .as_ref()
            .ok_or_else(|| fail("ground truth carries no probabilities".into()))?;
        let cand = candidates
            .candidates(word)
            .ok_or_else(|| fail("word absent from candidates".into()))?;
        let truth_cols: Vec<usize> = t
            .candidates
            .candidates()
            .iter()
            .map(|p| {
                cand.position(p.phones()).ok_or_else(|| {
                    fail(format!(
                        "true pronunciation {:?} not among candidates",
                        p.phone_string()
                    ))
                })
            })
            .collect::<Result<_>>()?;

        let cols = cand.phone_sequences();
        // distance[t][b] from each true pronunciation to each candidate
        let dist: Vec<Vec<usize>> = truth_cols
            .iter()
            .map(|&tc| cols.iter().map(|c| levenshtein(&cols[tc], c)).collect())
            .collect();

        let n_utts = cfg.utterances.for_word(word);
        let kappa = cfg.confusability.for_word(word);
        let mut rng = word_rng(cfg.seed, word);
        let mut tau = Vec::with_capacity(n_utts * cols.len());
        let mut row = alloc::vec![0.0; cols.len()];
        for _ in 0..n_utts {
            let pick = draw_index(&mut rng, probs);
            for (b, r) in row.iter_mut().enumerate() {
                let mut v = kernel(kappa, dist[pick][b]);
                if cfg.noise > 0.0 {
                    v *= libm::exp(cfg.noise * standard_normal(&mut rng));
                }
                *r = v;
            }
            let max = row.iter().copied().fold(0.0, f64::max);
            tau.extend(row.iter().map(|v| v / max));
        }
        let ids = (0..n_utts).map(|u| format!("{word}-{u:05}")).collect();
        let m = EvidenceMatrix::new(word, ids, cols, tau, cfg.delta)?;
        out.insert(word.to_string(), m);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordEval {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub learned: usize,
    pub truth: usize,
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_word: BTreeMap<String, WordEval>,
    /// Micro-averaged over (word, pronunciation) pairs.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_prons_learned: f64,
    pub mean_prons_truth: f64,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Set comparison of learned against true pronunciations, by phone sequence.
pub fn evaluate(learned: &Lexicon, truth: &Lexicon) -> Result<EvalReport> {
    let diff: Vec<&str> = learned
        .words()
        .filter(|w| !truth.contains_word(w))
        .chain(truth.words().filter(|w| !learned.contains_word(w)))
        .collect();
    if !diff.is_empty() {
        let mut sorted = diff;
        sorted.sort_unstable();
        sorted.truncate(10);
        return Err(Error::VocabularyMismatch(sorted.join(", ")));
    }

    let mut per_word = BTreeMap::new();
    let (mut overlap, mut n_learned, mut n_truth) = (0, 0, 0);
    for (word, l) in learned.iter() {
        let t = &truth.get(word).expect("vocabularies checked").candidates;
        let l = &l.candidates;
        let common = l.candidates().iter().filter(|p| t.contains(p.phones())).count();
        let precision = ratio(common, l.len());
        let recall = ratio(common, t.len());
        per_word.insert(
            word.to_string(),
            WordEval {
                precision,
                recall,
                f1: f1_score(precision, recall),
                learned: l.len(),
                truth: t.len(),
                overlap: common,
            },
        );
        overlap += common;
        n_learned += l.len();
        n_truth += t.len();
    }
    let precision = ratio(overlap, n_learned);
    let recall = ratio(overlap, n_truth);
    Ok(EvalReport {
        per_word,
        precision,
        recall,
        f1: f1_score(precision, recall),
        mean_prons_learned: learned.mean_pronunciations(),
        mean_prons_truth: truth.mean_pronunciations(),
    })
}

/// Mean over rows of `tau[true] - max tau[c]` across competitors `c` at edit
/// distance at least 1 from the row's true pronunciation.
///
/// `true_cols[u]` names the true column of row `u`.
pub fn mean_true_margin(ev: &EvidenceMatrix, true_cols: &[usize]) -> f64 {
    let cands: &[Vec<Phone>] = ev.candidates();
    let mut total = 0.0;
    for (u, &tc) in true_cols.iter().enumerate() {
        let row = ev.row(u);
        let best_other = (0..row.len())
            .filter(|&c| levenshtein(&cands[c], &cands[tc]) >= 1)
            .map(|c| row[c])
            .fold(f64::NEG_INFINITY, f64::max);
        total += row[tc] - best_other;
    }
    total / true_cols.len() as f64
}

/// Re-draws the true column of every simulated row of `word`, following the
/// same stream as [`simulate_evidence`].
pub fn true_columns(candidates: &Lexicon, truth: &Lexicon, cfg: &SimConfig, word: &str) -> Result<Vec<usize>> {
    let fail = |reason: &str| Error::Simulation {
        word: word.to_string(),
        reason: reason.to_string(),
    };
    let t = truth.get(word).ok_or_else(|| fail("word absent from truth"))?;
    let probs = t
        .probs
        .as_ref()
        .ok_or_else(|| fail("ground truth carries no probabilities"))?;
    let cand = candidates
        .candidates(word)
        .ok_or_else(|| fail("word absent from candidates"))?;
    let cols: Vec<usize> = t
        .candidates
        .candidates()
        .iter()
        .map(|p| {
            cand.position(p.phones())
                .ok_or_else(|| fail("true pronunciation not a candidate"))
        })
        .collect::<Result<_>>()?;
    let mut rng = word_rng(cfg.seed, word);
    let mut out = Vec::new();
    for _ in 0..cfg.utterances.for_word(word) {
        out.push(cols[draw_index(&mut rng, probs)]);
        if cfg.noise > 0.0 {
            for _ in 0..cand.len() {
                standard_normal(&mut rng);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{CandidateSet, Pronunciation, Source};

    fn lexicon(entries: &[(&str, &[&str], Option<&[f64]>)]) -> Lexicon {
        let mut lex = Lexicon::new();
        for (w, prons, probs) in entries {
            let set = CandidateSet::new(
                *w,
                prons
                    .iter()
                    .map(|p| Pronunciation::parse(p, Source::G2P).unwrap())
                    .collect(),
            )
            .unwrap();
            match probs {
                Some(p) => lex.insert_with_probs(set, p.to_vec()).unwrap(),
                None => lex.insert(set),
            }
        }
        lex
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn infinite_confusability_without_noise_is_one_hot() {
        let truth = lexicon(&[("us", &["AH S"], Some(&[1.0]))]);
        let cands = lexicon(&[("us", &["AH S", "Y UW EH S", "AH Z"], None)]);
        let cfg = SimConfig {
            confusability: PerWord::uniform(f64::INFINITY),
            noise: 0.0,
            utterances: UtteranceCounts::uniform(5),
            seed: 3,
            delta: 1e-5,
        };
        let ev = &simulate_evidence(&cands, &truth, &cfg).unwrap()["us"];
        for row in ev.rows() {
            assert_eq!(row, &[1.0, 1e-5, 1e-5]);
        }
    }

    #[test]
    fn zero_confusability_without_noise_is_flat() {
        let truth = lexicon(&[("w", &["A B"], Some(&[1.0]))]);
        let cands = lexicon(&[("w", &["A B", "A C", "D"], None)]);
        let cfg = SimConfig {
            confusability: PerWord::uniform(0.0),
            noise: 0.0,
            ..SimConfig::default()
        };
        let ev = &simulate_evidence(&cands, &truth, &cfg).unwrap()["w"];
        assert!(ev.rows().all(|r| r.iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn deterministic_and_row_max_one() {
        let truth = lexicon(&[("w", &["A B", "C D E"], Some(&[0.7, 0.3]))]);
        let cands = lexicon(&[("w", &["A B", "C D E", "A C"], None)]);
        let cfg = SimConfig {
            confusability: PerWord::uniform(1.5),
            noise: 0.3,
            utterances: UtteranceCounts::uniform(50),
            seed: 11,
            delta: 1e-5,
        };
        let a = simulate_evidence(&cands, &truth, &cfg).unwrap();
        let b = simulate_evidence(&cands, &truth, &cfg).unwrap();
        assert_eq!(a, b);
        for row in a["w"].rows() {
            assert_eq!(row.iter().copied().fold(0.0, f64::max), 1.0);
            assert!(row.iter().all(|&v| (1e-5..=1.0).contains(&v)));
        }
        let other = simulate_evidence(&cands, &truth, &SimConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn precondition_errors_name_the_word() {
        let truth = lexicon(&[("w", &["A B"], Some(&[1.0]))]);
        let cands = lexicon(&[("w", &["A C"], None)]);
        match simulate_evidence(&cands, &truth, &SimConfig::default()) {
            Err(Error::Simulation { word, .. }) => assert_eq!(word, "w"),
            other => panic!("unexpected {other:?}"),
        }
        let empty = Lexicon::new();
        assert!(simulate_evidence(&empty, &truth, &SimConfig::default()).is_err());
    }

    #[test]
    fn margin_grows_with_confusability() {
        let truth = lexicon(&[("w", &["A B C", "A B D"], Some(&[0.6, 0.4]))]);
        let cands = lexicon(&[("w", &["A B C", "A B D", "X B C", "A Y Z"], None)]);
        let mut prev = f64::NEG_INFINITY;
        for kappa in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let cfg = SimConfig {
                confusability: PerWord::uniform(kappa),
                noise: 0.2,
                utterances: UtteranceCounts::uniform(80),
                seed: 5,
                delta: 1e-5,
            };
            let ev = &simulate_evidence(&cands, &truth, &cfg).unwrap()["w"];
            let cols = true_columns(&cands, &truth, &cfg, "w").unwrap();
            let margin = mean_true_margin(ev, &cols);
            assert!(margin >= prev - 1e-12, "kappa {kappa}: {margin} < {prev}");
            prev = margin;
        }
    }

    #[test]
    fn evaluate_cases() {
        let truth = lexicon(&[("a", &["A"], None), ("b", &["B", "B2"], None)]);
        let r = evaluate(&truth, &truth).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));

        let learned = lexicon(&[("a", &["A", "X"], None), ("b", &["B", "B2"], None)]);
        let r = evaluate(&learned, &truth).unwrap();
        let a = r.per_word["a"];
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((r.precision - 0.75).abs() < 1e-15);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.mean_prons_learned, 2.0);

        let disjoint = lexicon(&[("a", &["Q"], None), ("b", &["R"], None)]);
        let r = evaluate(&disjoint, &truth).unwrap();
        assert_eq!(r.per_word["a"].f1, 0.0);
        assert_eq!(r.f1, 0.0);

        let other = lexicon(&[("a", &["A"], None), ("c", &["C"], None)]);
        match evaluate(&other, &truth) {
            Err(Error::VocabularyMismatch(s)) => assert_eq!(s, "b, c"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn evaluate_swaps_precision_and_recall() {
        let a = lexicon(&[("x", &["A", "B", "C"], None), ("y", &["D"], None)]);
        let b = lexicon(&[("x", &["A", "E"], None), ("y", &["D", "F"], None)]);
        let ab = evaluate(&a, &b).unwrap();
        let ba = evaluate(&b, &a).unwrap();
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
        assert_eq!(ab.f1, ba.f1);
    }
}
