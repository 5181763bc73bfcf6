//! Phones, pronunciations, candidate sets and lexicons.
//!
//! A [`Pronunciation`] pairs a phone sequence with the [`Source`] that proposed
//! it. Membership in a [`CandidateSet`] is decided by the phone sequence alone,
//! so the same baseform coming from two sources occupies a single slot.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on the sum of a word's probabilities for in-memory lexicons.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// A single phone symbol, e.g. `AH`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phone(String);

impl Phone {
    pub fn new(symbol: impl Into<String>) -> Result<Self> {
        let symbol = symbol.into();
        if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
            return Err(Error::InvalidPhone(symbol));
        }
        Ok(Phone(symbol))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Phone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parse a whitespace-separated phone string such as `"M AH SH IY N"`.
pub fn parse_phones(s: &str) -> Result<Vec<Phone>> {
    let phones = s.split_whitespace().map(Phone::new).collect::<Result<Vec<_>>>()?;
    if phones.is_empty() {
        return Err(Error::EmptyPronunciation);
    }
    Ok(phones)
}

/// Space-joined rendering of a phone sequence.
pub fn phones_to_string(phones: &[Phone]) -> String {
    let mut out = String::new();
    for (i, p) in phones.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(p.as_str());
    }
    out
}

/// Where a candidate pronunciation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    G2P,
    PhoneticDecoding,
    /// Seed or expert lexicon entry.
    Reference,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::G2P, Source::PhoneticDecoding, Source::Reference];

    pub fn tag(self) -> &'static str {
        match self {
            Source::G2P => "g2p",
            Source::PhoneticDecoding => "pd",
            Source::Reference => "ref",
        }
    }

    /// Merge priority: higher wins when two sources propose the same baseform.
    pub fn priority(self) -> u8 {
        match self {
            Source::Reference => 2,
            Source::G2P => 1,
            Source::PhoneticDecoding => 0,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g2p" => Ok(Source::G2P),
            "pd" => Ok(Source::PhoneticDecoding),
            "ref" => Ok(Source::Reference),
            other => Err(Error::InvalidConfig(format!("unknown source tag {other:?}"))),
        }
    }
}

/// A baseform candidate: a non-empty phone sequence plus its source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pronunciation {
    phones: Vec<Phone>,
    source: Source,
}

impl Pronunciation {
    pub fn new(phones: Vec<Phone>, source: Source) -> Result<Self> {
        if phones.is_empty() {
            return Err(Error::EmptyPronunciation);
        }
        Ok(Pronunciation { phones, source })
    }

    /// Convenience constructor from a space-separated phone string.
    pub fn parse(phones: &str, source: Source) -> Result<Self> {
        Self::new(parse_phones(phones)?, source)
    }

    pub fn phones(&self) -> &[Phone] {
        &self.phones
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// True when both share the same phone sequence, whatever their sources.
    pub fn same_baseform(&self, other: &Pronunciation) -> bool {
        self.phones == other.phones
    }

    pub fn phone_string(&self) -> String {
        phones_to_string(&self.phones)
    }
}

/// The ordered, duplicate-free candidate list of one word.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    word: String,
    candidates: Vec<Pronunciation>,
}

impl CandidateSet {
    /// Builds a set, collapsing repeated phone sequences onto the first occurrence.
    pub fn new(word: impl Into<String>, candidates: Vec<Pronunciation>) -> Result<Self> {
        let word = word.into();
        let mut set = CandidateSet {
            word,
            candidates: Vec::with_capacity(candidates.len()),
        };
        for c in candidates {
            set.insert(c);
        }
        if set.candidates.is_empty() {
            return Err(Error::EmptyCandidateSet(set.word));
        }
        Ok(set)
    }

    /// Appends `p` unless its baseform is already present. Returns whether it was added.
    pub fn insert(&mut self, p: Pronunciation) -> bool {
        if self.contains(p.phones()) {
            return false;
        }
        self.candidates.push(p);
        true
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn candidates(&self) -> &[Pronunciation] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, phones: &[Phone]) -> bool {
        self.position(phones).is_some()
    }

    pub fn position(&self, phones: &[Phone]) -> Option<usize> {
        self.candidates.iter().position(|c| c.phones() == phones)
    }

    /// Same word and same phone sequences in the same order, sources ignored.
    /// (`==` also compares sources.)
    pub fn same_baseforms(&self, other: &CandidateSet) -> bool {
        self.word == other.word
            && self.len() == other.len()
            && self
                .candidates
                .iter()
                .zip(&other.candidates)
                .all(|(a, b)| a.same_baseform(b))
    }

    pub fn sources(&self) -> Vec<Source> {
        self.candidates.iter().map(Pronunciation::source).collect()
    }

    pub fn phone_sequences(&self) -> Vec<Vec<Phone>> {
        self.candidates.iter().map(|c| c.phones.clone()).collect()
    }

    /// Keeps the candidates at `indices` (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.word.clone(),
            indices.iter().map(|&i| self.candidates[i].clone()).collect(),
        )
    }
}

/// A word's candidates together with optional per-candidate probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub candidates: CandidateSet,
    pub probs: Option<Vec<f64>>,
}

/// Word → candidate set map, kept sorted by word.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

/// Checks that `probs` has one finite value in [0, 1] per candidate and sums to 1 within `tol`.
pub fn validate_probs(word: &str, n: usize, probs: &[f64], tol: f64) -> Result<()> {
    let fail = |reason: String| Error::InvalidProbabilities {
        word: word.to_string(),
        reason,
    };
    if probs.len() != n {
        return Err(fail(format!("{} probabilities for {} candidates", probs.len(), n)));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
        return Err(fail(format!("probability {p} outside [0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(fail(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the entry for `set.word()`, without probabilities.
    pub fn insert(&mut self, set: CandidateSet) {
        self.entries.insert(
            set.word().to_string(),
            LexiconEntry {
                candidates: set,
                probs: None,
            },
        );
    }

    /// Inserts with probabilities validated at [`PROB_SUM_TOL`].
    pub fn insert_with_probs(&mut self, set: CandidateSet, probs: Vec<f64>) -> Result<()> {
        self.insert_with_probs_tol(set, probs, PROB_SUM_TOL)
    }

    /// Inserts with probabilities validated at a caller-chosen sum tolerance.
    pub fn insert_with_probs_tol(&mut self, set: CandidateSet, probs: Vec<f64>, tol: f64) -> Result<()> {
        validate_probs(set.word(), set.len(), &probs, tol)?;
        self.entries.insert(
            set.word().to_string(),
            LexiconEntry {
                candidates: set,
                probs: Some(probs),
            },
        );
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(word)
    }

    pub fn candidates(&self, word: &str) -> Option<&CandidateSet> {
        self.entries.get(word).map(|e| &e.candidates)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Entries in lexicographic word order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_all_probs(&self) -> bool {
        self.entries.values().all(|e| e.probs.is_some())
    }

    pub fn total_pronunciations(&self) -> usize {
        self.entries.values().map(|e| e.candidates.len()).sum()
    }

    /// Mean number of pronunciations per word; 0 for an empty lexicon.
    pub fn mean_pronunciations(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.total_pronunciations() as f64 / self.entries.len() as f64
        }
    }

    /// Drops every probability vector.
    pub fn without_probs(&self) -> Lexicon {
        let mut out = Lexicon::new();
        for e in self.entries.values() {
            out.insert(e.candidates.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pron(s: &str, src: Source) -> Pronunciation {
        Pronunciation::parse(s, src).unwrap()
    }

    #[test]
    fn phone_rejects_whitespace_and_empty() {
        assert!(Phone::new("AH").is_ok());
        assert!(Phone::new("").is_err());
        assert!(Phone::new("A H").is_err());
        assert!(Phone::new("AH\t").is_err());
    }

    #[test]
    fn empty_pronunciation_rejected() {
        assert_eq!(Pronunciation::parse("   ", Source::G2P), Err(Error::EmptyPronunciation));
    }

    #[test]
    fn baseform_equality_ignores_source() {
        let a = CandidateSet::new("us", vec![pron("AH S", Source::G2P)]).unwrap();
        let b = CandidateSet::new("us", vec![pron("AH S", Source::Reference)]).unwrap();
        assert!(a.same_baseforms(&b));
        assert_ne!(a, b);
        let c = CandidateSet::new("us", vec![pron("AH Z", Source::G2P)]).unwrap();
        assert!(!a.same_baseforms(&c));
    }

    #[test]
    fn duplicate_baseform_never_grows_set() {
        let mut set = CandidateSet::new(
            "machine",
            vec![
                pron("M AH SH IY N", Source::G2P),
                pron("M IH SH IY N", Source::PhoneticDecoding),
            ],
        )
        .unwrap();
        assert_eq!(set.len(), 2);
        assert!(!set.insert(pron("M AH SH IY N", Source::Reference)));
        assert_eq!(set.len(), 2);
        // first source encountered wins
        assert_eq!(set.candidates()[0].source(), Source::G2P);
    }

    #[test]
    fn empty_candidate_set_rejected() {
        assert!(matches!(
            CandidateSet::new("w", vec![]),
            Err(Error::EmptyCandidateSet(_))
        ));
    }

    #[test]
    fn source_tags_round_trip() {
        for s in Source::ALL {
            assert_eq!(s.tag().parse::<Source>().unwrap(), s);
        }
        assert!("G2P".parse::<Source>().is_err());
    }

    #[test]
    fn probability_validation() {
        let set = CandidateSet::new("us", vec![pron("AH S", Source::G2P), pron("Y UW EH S", Source::G2P)]).unwrap();
        let mut lex = Lexicon::new();
        assert!(lex.insert_with_probs(set.clone(), vec![0.992, 0.008]).is_ok());
        assert!(lex.insert_with_probs(set.clone(), vec![0.9, 0.2]).is_err());
        assert!(lex.insert_with_probs(set.clone(), vec![1.0]).is_err());
        assert!(lex.insert_with_probs(set, vec![1.1, -0.1]).is_err());
    }
}
