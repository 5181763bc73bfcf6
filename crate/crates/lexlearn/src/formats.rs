//! Line-oriented text formats. All are UTF-8 with `\n` line endings and
//! literal TAB separators; blank lines are ignored.
//!
//! | document          | line                                          |
//! |-------------------|-----------------------------------------------|
//! | lexicon           | `word TAB source TAB phones [TAB prob]`       |
//! | evidence          | `utterance TAB word TAB posterior TAB phones` |
//! | alignment counts  | `word TAB count TAB phones`                   |
//! | selection trace   | `word TAB REMOVED|KEPT TAB score TAB phones`  |
//! | evaluation        | `word TAB precision TAB recall TAB f1`        |
//!
//! Phones are space-separated. Source tags are `g2p`, `pd` and `ref`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lexlearn_core::lexicon::{parse_phones, phones_to_string};
use lexlearn_core::sim::{EvalReport, PerWord, SimConfig};
use lexlearn_core::{
    AlignmentCounts, CandidateSet, EvidenceBuilder, EvidenceMatrix, Lexicon, Pronunciation, SelectionTrace, Source,
};

use crate::error::FormatError;

/// Per-candidate slack allowed when probabilities read back from a file do not
/// sum to exactly 1 (they are written with six decimals).
pub const PRINTED_PROB_SLACK: f64 = 5e-7;

fn non_blank(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn fields<'a>(line_no: usize, line: &'a str, expected: &[usize]) -> Result<Vec<&'a str>, FormatError> {
    let f: Vec<&str> = line.split('\t').collect();
    if !expected.contains(&f.len()) {
        let want = expected.iter().map(usize::to_string).collect::<Vec<_>>().join(" or ");
        return Err(FormatError::syntax(
            line_no,
            format!("expected {want} tab-separated fields, found {}", f.len()),
        ));
    }
    Ok(f)
}

fn word_field(line_no: usize, word: &str) -> Result<(), FormatError> {
    if word.is_empty() {
        return Err(FormatError::syntax(line_no, "empty word"));
    }
    Ok(())
}

fn parse_f64(line_no: usize, what: &str, s: &str) -> Result<f64, FormatError> {
    s.trim()
        .parse()
        .map_err(|_| FormatError::syntax(line_no, format!("{what} {s:?} is not a number")))
}

struct PendingWord {
    first_line: usize,
    with_probs: bool,
    candidates: Vec<Pronunciation>,
    probs: Vec<f64>,
}

/// Parses a lexicon document. Repeated phone sequences for a word keep the
/// first line's source (and probability). A word must give probabilities on
/// all of its lines or on none.
pub fn parse_lexicon(text: &str) -> Result<Lexicon, FormatError> {
    let mut words: BTreeMap<&str, PendingWord> = BTreeMap::new();
    for (n, line) in non_blank(text) {
        let f = fields(n, line, &[3, 4])?;
        word_field(n, f[0])?;
        let source: Source = f[1].parse().map_err(|e| FormatError::invalid(n, e))?;
        let phones = parse_phones(f[2]).map_err(|e| FormatError::invalid(n, e))?;
        let prob = f.get(3).map(|p| parse_f64(n, "probability", p)).transpose()?;

        let entry = words.entry(f[0]).or_insert_with(|| PendingWord {
            first_line: n,
            with_probs: prob.is_some(),
            candidates: Vec::new(),
            probs: Vec::new(),
        });
        if entry.with_probs != prob.is_some() {
            return Err(FormatError::syntax(
                n,
                format!(
                    "word {:?} has probabilities on some lines but not others (first line {})",
                    f[0], entry.first_line
                ),
            ));
        }
        if entry.candidates.iter().any(|c| c.phones() == &phones[..]) {
            continue;
        }
        entry
            .candidates
            .push(Pronunciation::new(phones, source).map_err(|e| FormatError::invalid(n, e))?);
        entry.probs.extend(prob);
    }

    let mut lex = Lexicon::new();
    for (word, p) in words {
        let set = CandidateSet::new(word, p.candidates).map_err(|e| FormatError::invalid(p.first_line, e))?;
        if p.with_probs {
            let tol = PRINTED_PROB_SLACK * set.len() as f64 + 1e-9;
            lex.insert_with_probs_tol(set, p.probs, tol)
                .map_err(|e| FormatError::invalid(p.first_line, e))?;
        } else {
            lex.insert(set);
        }
    }
    Ok(lex)
}

fn check_word(word: &str) -> Result<(), FormatError> {
    if word.is_empty() || word.contains(['\t', '\n', '\r']) || word.trim().is_empty() {
        return Err(FormatError::Unserializable {
            word: word.to_string(),
            reason: "words must be non-blank and free of tabs and line breaks".into(),
        });
    }
    Ok(())
}

/// Renders a lexicon sorted by word, candidates in stored order. With
/// `with_probs`, every word must carry probabilities; they are printed with
/// six decimals.
pub fn serialize_lexicon(lex: &Lexicon, with_probs: bool) -> Result<String, FormatError> {
    let mut out = String::new();
    for (word, entry) in lex.iter() {
        check_word(word)?;
        let probs = match (&entry.probs, with_probs) {
            (Some(p), true) => Some(p),
            (None, true) => {
                return Err(FormatError::Unserializable {
                    word: word.to_string(),
                    reason: "no probabilities to write".into(),
                })
            }
            (_, false) => None,
        };
        for (i, c) in entry.candidates.candidates().iter().enumerate() {
            let _ = write!(out, "{word}\t{}\t{}", c.source(), c.phone_string());
            if let Some(p) = probs {
                let _ = write!(out, "\t{:.6}", p[i]);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Parses an evidence document into one matrix per word. Cells absent from
/// the input, and cells below `delta`, become `delta`.
pub fn parse_evidence(text: &str, delta: f64) -> Result<BTreeMap<String, EvidenceMatrix>, FormatError> {
    let mut builder = EvidenceBuilder::new();
    for (n, line) in non_blank(text) {
        let f = fields(n, line, &[4])?;
        if f[0].is_empty() {
            return Err(FormatError::syntax(n, "empty utterance id"));
        }
        word_field(n, f[1])?;
        let posterior = parse_f64(n, "posterior", f[2])?;
        let phones = parse_phones(f[3]).map_err(|e| FormatError::invalid(n, e))?;
        builder
            .add(f[0], f[1], phones, posterior)
            .map_err(|e| FormatError::invalid(n, e))?;
    }
    Ok(builder.build(delta)?)
}

/// Writes every cell of every matrix, words in the given order, rows then
/// columns in matrix order. Values use the shortest round-trip rendering.
pub fn write_evidence<'a>(matrices: impl IntoIterator<Item = &'a EvidenceMatrix>) -> String {
    let mut out = String::new();
    for ev in matrices {
        let phones: Vec<String> = ev.candidates().iter().map(|c| phones_to_string(c)).collect();
        for (u, id) in ev.utterance_ids().iter().enumerate() {
            for (b, p) in phones.iter().enumerate() {
                let _ = writeln!(out, "{id}\t{}\t{}\t{p}", ev.word(), ev.get(u, b));
            }
        }
    }
    out
}

/// Parses alignment counts. Repeated (word, phones) lines add up.
pub fn parse_alignment_counts(text: &str) -> Result<Vec<AlignmentCounts>, FormatError> {
    let mut words: BTreeMap<&str, AlignmentCounts> = BTreeMap::new();
    for (n, line) in non_blank(text) {
        let f = fields(n, line, &[3])?;
        word_field(n, f[0])?;
        let count: u64 = f[1]
            .trim()
            .parse()
            .map_err(|_| FormatError::syntax(n, format!("count {:?} is not a non-negative integer", f[1])))?;
        let phones = parse_phones(f[2]).map_err(|e| FormatError::invalid(n, e))?;
        words
            .entry(f[0])
            .or_insert_with(|| AlignmentCounts::new(f[0]))
            .add(phones, count);
    }
    Ok(words.into_values().collect())
}

fn fmt_score(s: f64) -> String {
    format!("{s:.6}")
}

/// Renders one word's selection: removals in order, then survivors. When the
/// last-candidate guard fired a `# guard TAB word` comment line follows.
pub fn write_trace(trace: &SelectionTrace, out: &mut String) {
    let w = &trace.word;
    for s in &trace.steps {
        let _ = writeln!(
            out,
            "{w}\tREMOVED\t{}\t{}",
            fmt_score(s.score),
            s.removed.phone_string()
        );
    }
    for (c, score) in trace.final_set.candidates().iter().zip(&trace.final_scores) {
        let _ = writeln!(out, "{w}\tKEPT\t{}\t{}", fmt_score(*score), c.phone_string());
    }
    if trace.guard_triggered {
        let _ = writeln!(out, "# guard\t{w}");
    }
}

/// One line of a selection trace report.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub word: String,
    pub removed: bool,
    pub score: f64,
    pub phones: String,
}

/// Reads a trace report back, skipping `#` comment lines.
pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in non_blank(text) {
        if line.starts_with('#') {
            continue;
        }
        let f = fields(n, line, &[4])?;
        let removed = match f[1] {
            "REMOVED" => true,
            "KEPT" => false,
            other => return Err(FormatError::syntax(n, format!("unknown trace action {other:?}"))),
        };
        out.push(TraceLine {
            word: f[0].to_string(),
            removed,
            score: parse_f64(n, "score", f[2])?,
            phones: f[3].to_string(),
        });
    }
    Ok(out)
}

/// Reads a simulator config: `key=value` lines, `#` starts a comment.
///
/// Keys: `confusability`, `confusability.<word>`, `noise`,
/// `utterances_per_word`, `utterances.<word>`, `seed`, `delta`. Unset keys
/// keep [`SimConfig::default`] values.
pub fn parse_sim_config(text: &str) -> Result<SimConfig, FormatError> {
    let mut cfg = SimConfig::default();
    for (n, key, value) in key_values(text)? {
        let int = |v: &str| -> Result<u64, FormatError> {
            v.parse()
                .map_err(|_| FormatError::syntax(n, format!("{key}: {v:?} is not a non-negative integer")))
        };
        match key {
            "confusability" => cfg.confusability.default = parse_f64(n, key, value)?,
            "noise" => cfg.noise = parse_f64(n, key, value)?,
            "utterances_per_word" => cfg.utterances.default = int(value)? as usize,
            "seed" => cfg.seed = int(value)?,
            "delta" => cfg.delta = parse_f64(n, key, value)?,
            _ => {
                if let Some(word) = key.strip_prefix("confusability.") {
                    cfg.confusability
                        .per_word
                        .insert(word.to_string(), parse_f64(n, key, value)?);
                } else if let Some(word) = key.strip_prefix("utterances.") {
                    cfg.utterances.per_word.insert(word.to_string(), int(value)? as usize);
                } else {
                    return Err(FormatError::syntax(n, format!("unknown key {key:?}")));
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Renders a simulator config in the form [`parse_sim_config`] reads.
pub fn write_sim_config(cfg: &SimConfig) -> String {
    fn per_word<T: std::fmt::Display + Copy>(out: &mut String, key: &str, pw: &PerWord<T>) {
        for (w, v) in &pw.per_word {
            let _ = writeln!(out, "{key}.{w}={v}");
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "confusability={}", cfg.confusability.default);
    per_word(&mut out, "confusability", &cfg.confusability);
    let _ = writeln!(out, "noise={}", cfg.noise);
    let _ = writeln!(out, "utterances_per_word={}", cfg.utterances.default);
    per_word(&mut out, "utterances", &cfg.utterances);
    let _ = writeln!(out, "seed={}", cfg.seed);
    let _ = writeln!(out, "delta={}", cfg.delta);
    out
}

/// Splits a `key=value` document into `(line, key, value)` triples, trimmed,
/// with comments and blank lines dropped. Repeated keys are an error.
pub fn key_values(text: &str) -> Result<Vec<(usize, &str, &str)>, FormatError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FormatError::syntax(n, format!("expected key=value, found {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(FormatError::syntax(n, "empty key"));
        }
        if let Some(first) = seen.insert(k, n) {
            return Err(FormatError::syntax(n, format!("key {k:?} already set on line {first}")));
        }
        out.push((n, k, v));
    }
    Ok(out)
}

/// Machine-readable evaluation: one `word TAB precision TAB recall TAB f1`
/// line per word, followed by `#` lines with the micro-averaged aggregates
/// and mean pronunciation counts.
pub fn write_eval_lines(report: &EvalReport) -> String {
    let mut out = String::new();
    for (w, e) in &report.per_word {
        let _ = writeln!(out, "{w}\t{:.6}\t{:.6}\t{:.6}", e.precision, e.recall, e.f1);
    }
    let _ = writeln!(
        out,
        "# all\t{:.6}\t{:.6}\t{:.6}",
        report.precision, report.recall, report.f1
    );
    let _ = writeln!(
        out,
        "# prons_per_word\t{:.6}\t{:.6}",
        report.mean_prons_learned, report.mean_prons_truth
    );
    out
}

/// Human-readable evaluation table.
pub fn write_eval_table(report: &EvalReport) -> String {
    let width = report
        .per_word
        .keys()
        .map(|w| w.chars().count())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}  {:>5}",
        "word", "precision", "recall", "f1", "learned", "truth"
    );
    for (w, e) in &report.per_word {
        let _ = writeln!(
            out,
            "{w:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}  {:>5}",
            e.precision, e.recall, e.f1, e.learned, e.truth
        );
    }
    let _ = writeln!(
        out,
        "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7.3}  {:>5.3}",
        "ALL", report.precision, report.recall, report.f1, report.mean_prons_learned, report.mean_prons_truth
    );
    out
}
