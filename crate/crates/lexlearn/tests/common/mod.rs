#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexlearn::core::edit_distance::levenshtein;
use lexlearn::core::lexicon::parse_phones;
use lexlearn::core::{CandidateSet, EvidenceMatrix, Lexicon, Phone, Pronunciation, Source};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const D: f64 = 1e-5;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lexlearn")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn lexlearn(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn lexlearn")
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn lexlearn_ok(args: &[&str]) -> Output {
    let out = lexlearn(args);
    assert!(
        out.status.success(),
        "lexlearn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    /// Inclusive range.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// A cell in [`D`, 1]: exact floor, exact one, linear or log-uniform.
    pub fn cell(&mut self) -> f64 {
        match self.below(4) {
            0 => D,
            1 => 1.0,
            2 => D + (1.0 - D) * self.unit(),
            _ => D.powf(self.unit()),
        }
    }

    pub fn source(&mut self) -> Source {
        Source::ALL[self.below(3)]
    }
}

pub fn columns(n: usize) -> Vec<Vec<Phone>> {
    (0..n).map(|i| parse_phones(&format!("P{i}")).unwrap()).collect()
}

pub fn random_matrix(rng: &mut Rng, max_rows: usize, max_cols: usize) -> EvidenceMatrix {
    let rows = rng.range(1, max_rows);
    let cols = rng.range(1, max_cols);
    let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.cell()).collect()).collect();
    EvidenceMatrix::from_rows("w", columns(cols), &data, D).unwrap()
}

const PHONES: [&str; 30] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "OW", "P", "R", "S", "T", "UW", "Z",
];

fn phone(rng: &mut Rng) -> Phone {
    Phone::new(PHONES[rng.below(PHONES.len())]).unwrap()
}

/// One random substitution, insertion or deletion (never emptying the sequence).
fn edit(rng: &mut Rng, p: &mut Vec<Phone>) {
    let op = if p.len() <= 2 { rng.below(2) } else { rng.below(3) };
    let i = rng.below(p.len());
    match op {
        0 => p[i] = phone(rng),
        1 => p.insert(i, phone(rng)),
        _ => {
            p.remove(i);
        }
    }
}

/// Ground truth and inflated candidate pool for the end-to-end recovery test.
pub struct SyntheticLexicon {
    pub truth: Lexicon,
    pub candidates: Lexicon,
}

/// `words` words with 1-3 true pronunciations each (pairwise edit distance at
/// least 3, probabilities at least 1/7) and `distractors` G2P-style decoys per
/// word at edit distance 1-2 from a true pronunciation. The first true
/// pronunciation and all decoys are G2P candidates; further true variants come
/// from phonetic decoding.
pub fn synthetic_lexicon(seed: u64, words: usize, distractors: usize) -> SyntheticLexicon {
    let mut rng = Rng::new(seed);
    let mut truth = Lexicon::new();
    let mut candidates = Lexicon::new();
    for w in 0..words {
        let word = format!("w{w:03}");
        let n_true = [1, 1, 1, 2, 2, 3][rng.below(6)];
        let len = rng.range(3, 7);
        let mut trues: Vec<Vec<Phone>> = vec![(0..len).map(|_| phone(&mut rng)).collect()];
        while trues.len() < n_true {
            let mut v = trues[0].clone();
            for _ in 0..3 {
                edit(&mut rng, &mut v);
            }
            if trues.iter().all(|t| levenshtein(t, &v) >= 3) {
                trues.push(v);
            }
        }
        let mut weights: Vec<f64> = (0..n_true).map(|_| 1.0 + 2.0 * rng.unit()).collect();
        weights.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|x| (x / total * 1e6).round() / 1e6).collect();
        let fix = 1.0 - probs[1..].iter().sum::<f64>();
        let probs: Vec<f64> = std::iter::once((fix * 1e6).round() / 1e6)
            .chain(probs[1..].iter().copied())
            .collect();

        let mut decoys: Vec<Vec<Phone>> = Vec::new();
        while decoys.len() < distractors {
            let origin = &trues[rng.below(n_true)];
            let mut d = origin.clone();
            for _ in 0..rng.range(1, 2) {
                edit(&mut rng, &mut d);
            }
            let dist = levenshtein(origin, &d);
            if (1..=2).contains(&dist) && !trues.contains(&d) && !decoys.contains(&d) {
                decoys.push(d);
            }
        }

        let pron = |p: &Vec<Phone>, s| Pronunciation::new(p.clone(), s).unwrap();
        let true_set: Vec<Pronunciation> = trues
            .iter()
            .enumerate()
            .map(|(i, p)| pron(p, if i == 0 { Source::G2P } else { Source::PhoneticDecoding }))
            .collect();
        let mut cand = vec![true_set[0].clone()];
        cand.extend(decoys.iter().map(|d| pron(d, Source::G2P)));
        cand.extend(true_set[1..].iter().cloned());

        truth
            .insert_with_probs(CandidateSet::new(word.clone(), true_set).unwrap(), probs)
            .unwrap();
        candidates.insert(CandidateSet::new(word, cand).unwrap());
    }
    SyntheticLexicon { truth, candidates }
}
