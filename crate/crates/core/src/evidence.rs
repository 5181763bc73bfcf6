//! Acoustic evidence: floored per-utterance pronunciation likelihoods, their
//! averages, top-K column pruning, and the turning of phonetic-decoding
//! alignment counts into candidates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lexicon::{phones_to_string, CandidateSet, Lexicon, Phone, Pronunciation, Source};

/// `M_w x |B|` matrix of conditional likelihoods for one word, every cell at
/// least `delta`. Rows are utterances, columns candidate phone sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceMatrix {
    word: String,
    utterance_ids: Vec<String>,
    candidates: Vec<Vec<Phone>>,
    tau: Vec<f64>,
    delta: f64,
}

impl EvidenceMatrix {
    /// `tau` is row-major with `utterance_ids.len()` rows. Cells below `delta`
    /// are raised to it.
    pub fn new(
        word: impl Into<String>,
        utterance_ids: Vec<String>,
        candidates: Vec<Vec<Phone>>,
        mut tau: Vec<f64>,
        delta: f64,
    ) -> Result<Self> {
        let word = word.into();
        let bad = |reason: String| Error::InvalidEvidence {
            word: word.clone(),
            reason,
        };
        if !(delta > 0.0 && delta < 1.0) {
            return Err(bad(format!("floor {delta} outside (0, 1)")));
        }
        if utterance_ids.is_empty() {
            return Err(bad("no utterances".into()));
        }
        if candidates.is_empty() {
            return Err(bad("no candidates".into()));
        }
        if candidates.iter().any(Vec::is_empty) {
            return Err(Error::EmptyPronunciation);
        }
        let rows = utterance_ids.len();
        let cols = candidates.len();
        if tau.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: tau.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for id in &utterance_ids {
            if !seen.insert(id.as_str()) {
                return Err(bad(format!("utterance {id:?} appears twice")));
            }
        }
        for v in tau.iter_mut() {
            if !(v.is_finite() && *v >= 0.0 && *v <= 1.0) {
                return Err(bad(format!("likelihood {v} outside [0, 1]")));
            }
            if *v < delta {
                *v = delta;
            }
        }
        Ok(EvidenceMatrix {
            word,
            utterance_ids,
            candidates,
            tau,
            delta,
        })
    }

    /// Builds a matrix from explicit rows, naming utterances `u0, u1, ...`.
    pub fn from_rows(
        word: impl Into<String>,
        candidates: Vec<Vec<Phone>>,
        rows: &[Vec<f64>],
        delta: f64,
    ) -> Result<Self> {
        let cols = candidates.len();
        let mut tau = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            tau.extend_from_slice(r);
        }
        let ids = (0..rows.len()).map(|i| format!("u{i}")).collect();
        Self::new(word, ids, candidates, tau, delta)
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn utterance_ids(&self) -> &[String] {
        &self.utterance_ids
    }

    pub fn candidates(&self) -> &[Vec<Phone>] {
        &self.candidates
    }

    /// `M_w`.
    pub fn n_utterances(&self) -> usize {
        self.utterance_ids.len()
    }

    pub fn n_candidates(&self) -> usize {
        self.candidates.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn get(&self, utt: usize, cand: usize) -> f64 {
        self.tau[utt * self.candidates.len() + cand]
    }

    pub fn row(&self, utt: usize) -> &[f64] {
        let c = self.candidates.len();
        &self.tau[utt * c..(utt + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.tau.chunks_exact(self.candidates.len())
    }

    pub fn min_value(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// New matrix restricted to the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<EvidenceMatrix> {
        let mut tau = Vec::with_capacity(self.n_utterances() * columns.len());
        for row in self.rows() {
            tau.extend(columns.iter().map(|&c| row[c]));
        }
        EvidenceMatrix::new(
            self.word.clone(),
            self.utterance_ids.clone(),
            columns.iter().map(|&c| self.candidates[c].clone()).collect(),
            tau,
            self.delta,
        )
    }

    /// Re-indexes columns to follow `set`'s candidate order. Candidates with no
    /// evidence get an all-`delta` column; evidence for a baseform outside `set`
    /// is an error.
    pub fn align_to(&self, set: &CandidateSet) -> Result<EvidenceMatrix> {
        for c in &self.candidates {
            if !set.contains(c) {
                return Err(Error::UnknownCandidate {
                    word: self.word.clone(),
                    phones: phones_to_string(c),
                });
            }
        }
        let mapping: Vec<Option<usize>> = set
            .candidates()
            .iter()
            .map(|p| self.candidates.iter().position(|c| c == p.phones()))
            .collect();
        let mut tau = Vec::with_capacity(self.n_utterances() * mapping.len());
        for row in self.rows() {
            tau.extend(mapping.iter().map(|m| m.map_or(self.delta, |c| row[c])));
        }
        EvidenceMatrix::new(
            self.word.clone(),
            self.utterance_ids.clone(),
            set.phone_sequences(),
            tau,
            self.delta,
        )
    }
}

/// Accumulates sparse `(utterance, word, baseform) -> posterior` cells and
/// turns them into one dense [`EvidenceMatrix`] per word.
#[derive(Debug, Default)]
pub struct EvidenceBuilder {
    words: BTreeMap<String, WordCells>,
}

#[derive(Debug, Default)]
struct WordCells {
    utterances: Vec<String>,
    utt_index: BTreeMap<String, usize>,
    candidates: Vec<Vec<Phone>>,
    cand_index: BTreeMap<Vec<Phone>, usize>,
    cells: BTreeMap<(usize, usize), f64>,
}

impl EvidenceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, utterance: &str, word: &str, phones: Vec<Phone>, posterior: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&posterior) {
            return Err(Error::PosteriorOutOfRange {
                utterance: utterance.to_string(),
                word: word.to_string(),
                value: posterior,
            });
        }
        if phones.is_empty() {
            return Err(Error::EmptyPronunciation);
        }
        let w = self.words.entry(word.to_string()).or_default();
        let u = match w.utt_index.get(utterance) {
            Some(&u) => u,
            None => {
                let u = w.utterances.len();
                w.utterances.push(utterance.to_string());
                w.utt_index.insert(utterance.to_string(), u);
                u
            }
        };
        let b = match w.cand_index.get(&phones) {
            Some(&b) => b,
            None => {
                let b = w.candidates.len();
                w.candidates.push(phones.clone());
                w.cand_index.insert(phones.clone(), b);
                b
            }
        };
        if w.cells.insert((u, b), posterior).is_some() {
            return Err(Error::DuplicateEvidence {
                utterance: utterance.to_string(),
                word: word.to_string(),
                phones: phones_to_string(&phones),
            });
        }
        Ok(())
    }

    /// Dense matrices with absent cells set to `delta`. Rows and columns keep
    /// first-appearance order.
    pub fn build(self, delta: f64) -> Result<BTreeMap<String, EvidenceMatrix>> {
        let mut out = BTreeMap::new();
        for (word, w) in self.words {
            let cols = w.candidates.len();
            let mut tau = vec![0.0; w.utterances.len() * cols];
            for ((u, b), v) in w.cells {
                tau[u * cols + b] = v;
            }
            let m = EvidenceMatrix::new(word.clone(), w.utterances, w.candidates, tau, delta)?;
            out.insert(word, m);
        }
        Ok(out)
    }
}

/// Column means: the average pronunciation posterior of each candidate.
pub fn average_posteriors(ev: &EvidenceMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; ev.n_candidates()];
    for row in ev.rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let m = ev.n_utterances() as f64;
    sums.into_iter().map(|s| s / m).collect()
}

/// Keeps the `k` columns with the highest average posterior. Ties prefer the
/// lexicographically smaller phone sequence; surviving columns keep their order.
pub fn prune_top_k(ev: &EvidenceMatrix, k: usize) -> Result<EvidenceMatrix> {
    if k == 0 {
        return Err(Error::InvalidConfig("top_k must be positive".into()));
    }
    if ev.n_candidates() <= k {
        return Ok(ev.clone());
    }
    let kept = top_k_indices(ev, k);
    ev.select_columns(&kept)
}

/// Column indices kept by [`prune_top_k`], ascending.
pub fn top_k_indices(ev: &EvidenceMatrix, k: usize) -> Vec<usize> {
    let avg = average_posteriors(ev);
    let mut order: Vec<usize> = (0..ev.n_candidates()).collect();
    order.sort_by(|&a, &b| {
        avg[b]
            .partial_cmp(&avg[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ev.candidates()[a].cmp(&ev.candidates()[b]))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Phonetic-decoding alignment counts for one word.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlignmentCounts {
    pub word: String,
    pub counts: BTreeMap<Vec<Phone>, u64>,
}

impl AlignmentCounts {
    pub fn new(word: impl Into<String>) -> Self {
        AlignmentCounts {
            word: word.into(),
            counts: BTreeMap::new(),
        }
    }

    /// Adds `count` occurrences of `phones`.
    pub fn add(&mut self, phones: Vec<Phone>, count: u64) {
        *self.counts.entry(phones).or_insert(0) += count;
    }
}

/// Normalizes each count by the largest one and keeps sequences whose ratio is
/// at least `threshold`, most frequent first (ties lexicographic).
pub fn filter_by_relative_frequency(counts: &AlignmentCounts, threshold: f64) -> Result<Vec<Pronunciation>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "relative-frequency threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let max = counts.counts.values().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::AllCountsZero(counts.word.clone()));
    }
    let mut kept: Vec<(&Vec<Phone>, u64)> = counts
        .counts
        .iter()
        .filter(|(_, &c)| c as f64 / max as f64 >= threshold)
        .map(|(p, &c)| (p, c))
        .collect();
    // BTreeMap iteration is already lexicographic, so a stable sort on count suffices.
    kept.sort_by_key(|k| core::cmp::Reverse(k.1));
    kept.into_iter()
        .map(|(p, _)| Pronunciation::new(p.clone(), Source::PhoneticDecoding))
        .collect()
}

/// Per-word union of reference, G2P and phonetic-decoding candidates. A
/// baseform proposed by several sources is stored once, under the source with
/// the highest priority (reference > G2P > phonetic decoding). Candidates are
/// ordered reference first, then G2P in input order, then phonetic decoding.
/// Probabilities are not carried over.
pub fn merge_candidates(g2p: &Lexicon, pd: &[(String, Pronunciation)], reference: &Lexicon) -> Lexicon {
    let mut merged: BTreeMap<String, Vec<Pronunciation>> = BTreeMap::new();
    let mut push = |word: &str, p: Pronunciation| {
        let list = merged.entry(word.to_string()).or_default();
        match list.iter_mut().find(|c| c.same_baseform(&p)) {
            Some(existing) => {
                if p.source().priority() > existing.source().priority() {
                    *existing = p;
                }
            }
            None => list.push(p),
        }
    };
    for (word, entry) in reference.iter() {
        for c in entry.candidates.candidates() {
            push(word, c.clone());
        }
    }
    for (word, entry) in g2p.iter() {
        for c in entry.candidates.candidates() {
            push(word, c.clone());
        }
    }
    for (word, p) in pd {
        push(word, p.clone());
    }
    let mut out = Lexicon::new();
    for (word, list) in merged {
        // non-empty by construction
        if let Ok(set) = CandidateSet::new(word, list) {
            out.insert(set);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::parse_phones;

    fn ph(s: &str) -> Vec<Phone> {
        parse_phones(s).unwrap()
    }

    const D: f64 = 1e-5;

    #[test]
    fn single_cell_load() {
        let mut b = EvidenceBuilder::new();
        b.add("utt1", "us", ph("AH S"), 0.9).unwrap();
        let m = b.build(D).unwrap();
        let ev = &m["us"];
        assert_eq!(ev.n_utterances(), 1);
        assert_eq!(ev.n_candidates(), 1);
        assert_eq!(ev.get(0, 0), 0.9);
    }

    #[test]
    fn zero_posterior_floored() {
        let mut b = EvidenceBuilder::new();
        b.add("utt1", "us", ph("AH S"), 0.0).unwrap();
        let m = b.build(D).unwrap();
        assert_eq!(m["us"].get(0, 0), D);
    }

    #[test]
    fn missing_cell_floored() {
        let mut b = EvidenceBuilder::new();
        b.add("u1", "w", ph("A"), 0.8).unwrap();
        b.add("u1", "w", ph("B"), 0.2).unwrap();
        b.add("u2", "w", ph("A"), 0.6).unwrap();
        let m = b.build(D).unwrap();
        let ev = &m["w"];
        assert_eq!(ev.row(0), &[0.8, 0.2]);
        assert_eq!(ev.row(1), &[0.6, D]);
        assert!(ev.min_value() >= D);
    }

    #[test]
    fn posterior_out_of_range_and_duplicates_rejected() {
        let mut b = EvidenceBuilder::new();
        assert!(matches!(
            b.add("u1", "w", ph("A"), 1.5),
            Err(Error::PosteriorOutOfRange { .. })
        ));
        assert!(b.add("u1", "w", ph("A"), -0.1).is_err());
        b.add("u1", "w", ph("A"), 0.5).unwrap();
        assert!(matches!(
            b.add("u1", "w", ph("A"), 0.4),
            Err(Error::DuplicateEvidence { .. })
        ));
    }

    #[test]
    fn averages() {
        let ev = EvidenceMatrix::from_rows("w", vec![ph("A")], &[vec![0.9], vec![0.7]], D).unwrap();
        assert!((average_posteriors(&ev)[0] - 0.8).abs() < 1e-15);

        let ev = EvidenceMatrix::from_rows("w", vec![ph("A"), ph("B")], &[vec![1.0, D], vec![D, 1.0]], D).unwrap();
        let avg = average_posteriors(&ev);
        assert!((avg[0] - 0.500005).abs() < 1e-15);
        assert!((avg[1] - 0.500005).abs() < 1e-15);

        let ev = EvidenceMatrix::from_rows("w", vec![ph("A")], &[vec![0.2], vec![0.3], vec![0.4]], D).unwrap();
        assert!((average_posteriors(&ev)[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn top_k_keeps_best_in_original_order() {
        let cands: Vec<Vec<Phone>> = (0..12).map(|i| ph(&format!("P{i:02}"))).collect();
        let row: Vec<f64> = (0..12).map(|i| 1.0 - 0.05 * i as f64).collect();
        let ev = EvidenceMatrix::from_rows("w", cands.clone(), &[row], D).unwrap();
        let pruned = prune_top_k(&ev, 10).unwrap();
        assert_eq!(pruned.candidates(), &cands[..10]);
        assert_eq!(prune_top_k(&pruned, 10).unwrap(), pruned);

        let small = EvidenceMatrix::from_rows("w", vec![ph("A"), ph("B")], &[vec![0.3, 0.9]], D).unwrap();
        assert_eq!(prune_top_k(&small, 10).unwrap(), small);
    }

    #[test]
    fn top_k_tie_prefers_lexicographically_smaller() {
        let ev = EvidenceMatrix::from_rows("w", vec![ph("Z"), ph("A")], &[vec![0.5, 0.5]], D).unwrap();
        let pruned = prune_top_k(&ev, 1).unwrap();
        assert_eq!(pruned.candidates(), &[ph("A")]);
    }

    #[test]
    fn relative_frequency_filter() {
        let mut c = AlignmentCounts::new("w");
        c.add(ph("A"), 50);
        c.add(ph("B"), 10);
        c.add(ph("C"), 4);
        let kept = filter_by_relative_frequency(&c, 0.1).unwrap();
        let seqs: Vec<_> = kept.iter().map(|p| p.phone_string()).collect();
        assert_eq!(seqs, ["A", "B"]);
        assert!(kept.iter().all(|p| p.source() == Source::PhoneticDecoding));

        let mut single = AlignmentCounts::new("w");
        single.add(ph("X Y"), 3);
        assert_eq!(filter_by_relative_frequency(&single, 0.9).unwrap().len(), 1);
    }

    #[test]
    fn relative_frequency_boundary_is_inclusive() {
        let mut c = AlignmentCounts::new("w");
        c.add(ph("A"), 10);
        c.add(ph("B"), 1);
        // brute recomputation of the ratio
        let ratio = 1u64 as f64 / 10u64 as f64;
        assert!(ratio >= 0.1);
        assert_eq!(filter_by_relative_frequency(&c, 0.1).unwrap().len(), 2);
    }

    #[test]
    fn relative_frequency_ties_lexicographic_and_zero_error() {
        let mut c = AlignmentCounts::new("w");
        c.add(ph("B"), 5);
        c.add(ph("A"), 5);
        let kept = filter_by_relative_frequency(&c, 0.5).unwrap();
        assert_eq!(kept[0].phone_string(), "A");

        let mut z = AlignmentCounts::new("w");
        z.add(ph("A"), 0);
        assert!(matches!(
            filter_by_relative_frequency(&z, 0.1),
            Err(Error::AllCountsZero(_))
        ));
    }

    fn lex(entries: &[(&str, &str, Source)]) -> Lexicon {
        let mut by_word: BTreeMap<&str, Vec<Pronunciation>> = BTreeMap::new();
        for (w, p, s) in entries {
            by_word.entry(w).or_default().push(Pronunciation::parse(p, *s).unwrap());
        }
        let mut l = Lexicon::new();
        for (w, ps) in by_word {
            l.insert(CandidateSet::new(w, ps).unwrap());
        }
        l
    }

    #[test]
    fn merge_rules() {
        let g2p = lex(&[
            ("machine", "M AH SH IY N", Source::G2P),
            ("only", "OW N L IY", Source::G2P),
        ]);
        let pd = vec![
            (
                "machine".to_string(),
                Pronunciation::parse("M IH SH IY N", Source::PhoneticDecoding).unwrap(),
            ),
            (
                "us".to_string(),
                Pronunciation::parse("AH S", Source::PhoneticDecoding).unwrap(),
            ),
        ];
        let reference = lex(&[("us", "AH S", Source::Reference)]);
        let m = merge_candidates(&g2p, &pd, &reference);

        let machine = m.candidates("machine").unwrap();
        assert_eq!(machine.len(), 2);
        assert_eq!(machine.sources(), [Source::G2P, Source::PhoneticDecoding]);
        assert_eq!(m.candidates("only").unwrap().sources(), [Source::G2P]);
        let us = m.candidates("us").unwrap();
        assert_eq!(us.len(), 1);
        assert_eq!(us.candidates()[0].source(), Source::Reference);
    }

    #[test]
    fn align_to_candidate_order() {
        let set = CandidateSet::new(
            "w",
            vec![
                Pronunciation::parse("B", Source::G2P).unwrap(),
                Pronunciation::parse("A", Source::G2P).unwrap(),
                Pronunciation::parse("C", Source::G2P).unwrap(),
            ],
        )
        .unwrap();
        let ev = EvidenceMatrix::from_rows("w", vec![ph("A"), ph("B")], &[vec![0.3, 0.9]], D).unwrap();
        let aligned = ev.align_to(&set).unwrap();
        assert_eq!(aligned.row(0), &[0.9, 0.3, D]);

        let stray = EvidenceMatrix::from_rows("w", vec![ph("Q")], &[vec![0.3]], D).unwrap();
        assert!(matches!(stray.align_to(&set), Err(Error::UnknownCandidate { .. })));
    }
}
