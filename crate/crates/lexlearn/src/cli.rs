//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use lexlearn_core::sim::{evaluate, simulate_evidence};
use lexlearn_core::{Lexicon, SelectionConfig, Source};

use crate::formats;
use crate::manifest::{float, RunManifest};
use crate::pipeline::{self, Outcome, WordResult};

#[derive(Debug, Parser)]
#[command(
    name = "lexlearn",
    version,
    about = "Learn a compact pronunciation lexicon from acoustic evidence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Combine G2P, reference and phonetic-decoding candidates into one lexicon.
    Merge(MergeArgs),
    /// Greedy likelihood-reduction selection.
    Select(SelectArgs),
    /// Probability-threshold or G2P 1-best pruning.
    Baseline(BaselineArgs),
    /// Generate synthetic evidence from a ground-truth lexicon.
    Simulate(SimulateArgs),
    /// Score a learned lexicon against the ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("inputs").required(true).multiple(true).args(["g2p", "reference", "pd_counts"])))]
pub struct MergeArgs {
    /// G2P lexicon; candidate order is the G2P rank.
    #[arg(long)]
    pub g2p: Option<PathBuf>,
    /// Reference (expert) lexicon.
    #[arg(long = "ref", id = "reference")]
    pub reference: Option<PathBuf>,
    /// Phonetic-decoding alignment counts.
    #[arg(long)]
    pub pd_counts: Option<PathBuf>,
    /// Keep decoded sequences whose count is at least this fraction of the word's top count.
    #[arg(long, default_value_t = 0.1)]
    pub rel_freq_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Selection settings. Precedence: flag, then `--config` file, then default.
#[derive(Debug, Args, Default, Clone)]
pub struct SelectionFlags {
    /// `key=value` file; keys are the long flag names without dashes prefix.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha_g2p: Option<f64>,
    #[arg(long)]
    pub alpha_pd: Option<f64>,
    #[arg(long)]
    pub alpha_ref: Option<f64>,
    #[arg(long)]
    pub beta_g2p: Option<f64>,
    #[arg(long)]
    pub beta_pd: Option<f64>,
    #[arg(long)]
    pub beta_ref: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    #[arg(long)]
    pub em_max_iters: Option<usize>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub evidence: PathBuf,
    #[command(flatten)]
    pub selection: SelectionFlags,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-word removal/keep report.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Pp,
    #[value(name = "g2p1best")]
    G2p1best,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Keep candidates whose max-normalized probability reaches this value (default 0.4).
    #[arg(long)]
    pub pp_threshold: Option<f64>,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Required by `pp`.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    #[command(flatten)]
    pub selection: SelectionFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Ground-truth lexicon with probabilities.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Simulator `key=value` file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub learned: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Machine-readable per-word scores; the table goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

pub const DEFAULT_PP_THRESHOLD: f64 = 0.4;

/// Settings resolved from defaults, config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub selection: SelectionConfig,
    pub jobs: usize,
    pub pp_threshold: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read_lexicon(path: &Path) -> Result<Lexicon> {
    formats::parse_lexicon(&read(path)?).with_context(|| format!("invalid lexicon {}", path.display()))
}

impl SelectionFlags {
    pub fn resolve(&self) -> Result<Resolved> {
        let mut r = Resolved {
            selection: SelectionConfig::default(),
            jobs: 1,
            pp_threshold: DEFAULT_PP_THRESHOLD,
        };
        if let Some(path) = &self.config {
            let text = read(path)?;
            apply_config_file(&mut r, &text).with_context(|| format!("invalid config {}", path.display()))?;
        }
        let s = &mut r.selection;
        let src = [Source::G2P, Source::PhoneticDecoding, Source::Reference];
        let alphas = [self.alpha_g2p, self.alpha_pd, self.alpha_ref];
        let betas = [self.beta_g2p, self.beta_pd, self.beta_ref];
        for i in 0..3 {
            if let Some(a) = alphas[i] {
                s.alpha.set(src[i], a);
            }
            if let Some(b) = betas[i] {
                s.beta.set(src[i], b);
            }
        }
        if let Some(d) = self.delta {
            s.delta = d;
        }
        if let Some(k) = self.top_k {
            s.top_k = k;
        }
        if let Some(t) = self.em_tol {
            s.em.tol = t;
        }
        if let Some(n) = self.em_max_iters {
            s.em.max_iters = n;
        }
        if let Some(j) = self.jobs {
            r.jobs = j;
        }
        if r.jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        for w in r.selection.validate()? {
            eprintln!("warning: {w}");
        }
        Ok(r)
    }
}

fn apply_config_file(r: &mut Resolved, text: &str) -> Result<()> {
    for (line, key, value) in formats::key_values(text)? {
        let num = || -> Result<f64> {
            value
                .parse()
                .with_context(|| format!("line {line}: {key}: {value:?} is not a number"))
        };
        let int = || -> Result<usize> {
            value
                .parse()
                .with_context(|| format!("line {line}: {key}: {value:?} is not a non-negative integer"))
        };
        let s = &mut r.selection;
        match key {
            "delta" => s.delta = num()?,
            "alpha-g2p" => s.alpha.g2p = num()?,
            "alpha-pd" => s.alpha.pd = num()?,
            "alpha-ref" => s.alpha.reference = num()?,
            "beta-g2p" => s.beta.g2p = num()?,
            "beta-pd" => s.beta.pd = num()?,
            "beta-ref" => s.beta.reference = num()?,
            "top-k" => s.top_k = int()?,
            "em-tol" => s.em.tol = num()?,
            "em-max-iters" => s.em.max_iters = int()?,
            "jobs" => r.jobs = int()?,
            "pp-threshold" => r.pp_threshold = num()?,
            other => bail!("line {line}: unknown key {other:?}"),
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Merge(a) => merge(&a),
        Command::Select(a) => select(&a),
        Command::Baseline(a) => baseline(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
    }
}

fn write_manifest(m: &mut RunManifest, start: Instant, out: &Path) -> Result<()> {
    m.finish(start.elapsed());
    write(&RunManifest::path_for(out), &m.to_json())
}

fn write_results(results: &[WordResult], out: &Path) -> Result<()> {
    let lex = pipeline::to_lexicon(results)?;
    write(out, &formats::serialize_lexicon(&lex, lex.has_all_probs())?)
}

pub fn merge(a: &MergeArgs) -> Result<()> {
    let start = Instant::now();
    let mut m = RunManifest::new("merge");
    if !(a.rel_freq_threshold > 0.0 && a.rel_freq_threshold < 1.0) {
        bail!("--rel-freq-threshold must lie in (0, 1), got {}", a.rel_freq_threshold);
    }
    m.set("rel-freq-threshold", a.rel_freq_threshold);

    let g2p = a.g2p.as_deref().map(read_lexicon).transpose()?;
    let reference = a.reference.as_deref().map(read_lexicon).transpose()?;
    let counts = match &a.pd_counts {
        Some(p) => formats::parse_alignment_counts(&read(p)?)
            .with_context(|| format!("invalid alignment counts {}", p.display()))?,
        None => Vec::new(),
    };
    for (name, p) in [("g2p", &a.g2p), ("ref", &a.reference), ("pd-counts", &a.pd_counts)] {
        if let Some(p) = p {
            m.input(name, p);
        }
    }
    let lex = pipeline::combine(g2p.as_ref(), reference.as_ref(), &counts, a.rel_freq_threshold)?;
    write(&a.out, &formats::serialize_lexicon(&lex, false)?)?;
    m.output("lexicon", &a.out);

    m.words_processed = lex.len();
    m.candidates_in = g2p.as_ref().map_or(0, Lexicon::total_pronunciations)
        + reference.as_ref().map_or(0, Lexicon::total_pronunciations)
        + counts.iter().map(|c| c.counts.len()).sum::<usize>();
    m.candidates_out = lex.total_pronunciations();
    write_manifest(&mut m, start, &a.out)
}

fn load_inputs(
    lexicon: &Path,
    evidence: &Path,
    delta: f64,
) -> Result<(
    Lexicon,
    std::collections::BTreeMap<String, lexlearn_core::EvidenceMatrix>,
)> {
    let lex = read_lexicon(lexicon)?;
    let ev = formats::parse_evidence(&read(evidence)?, delta)
        .with_context(|| format!("invalid evidence {}", evidence.display()))?;
    Ok((lex, ev))
}

pub fn select(a: &SelectArgs) -> Result<()> {
    let start = Instant::now();
    let r = a.selection.resolve()?;
    let (lex, evidence) = load_inputs(&a.lexicon, &a.evidence, r.selection.delta)?;
    let results = pipeline::select_lexicon(&lex, &evidence, &r.selection, r.jobs)?;

    write_results(&results, &a.out)?;
    let mut m = RunManifest::new("select");
    m.set_selection(&r.selection);
    m.set("jobs", r.jobs);
    m.input("lexicon", &a.lexicon);
    m.input("evidence", &a.evidence);
    m.output("lexicon", &a.out);
    if let Some(t) = &a.trace {
        let mut report = String::new();
        for res in &results {
            match &res.outcome {
                Outcome::Selected(trace) => formats::write_trace(trace, &mut report),
                _ => report.push_str(&format!("# bypass\t{}\n", res.word)),
            }
        }
        write(t, &report)?;
        m.output("trace", t);
    }
    m.count(&results);
    write_manifest(&mut m, start, &a.out)
}

pub fn baseline(a: &BaselineArgs) -> Result<()> {
    let start = Instant::now();
    let mut r = a.selection.resolve()?;
    if let Some(t) = a.pp_threshold {
        r.pp_threshold = t;
    }
    let mut m = RunManifest::new("baseline");
    m.input("lexicon", &a.lexicon);
    let results = match a.method {
        Method::Pp => {
            let Some(evidence) = &a.evidence else {
                bail!("--method pp needs --evidence");
            };
            let (lex, ev) = load_inputs(&a.lexicon, evidence, r.selection.delta)?;
            m.input("evidence", evidence);
            m.set("method", "pp");
            m.set("pp-threshold", r.pp_threshold);
            m.set("delta", r.selection.delta);
            m.set("top-k", r.selection.top_k);
            m.set("em-tol", r.selection.em.tol);
            m.set("em-max-iters", r.selection.em.max_iters);
            m.set("jobs", r.jobs);
            pipeline::pp_lexicon(&lex, &ev, &r.selection, r.pp_threshold, r.jobs)?
        }
        Method::G2p1best => {
            m.set("method", "g2p1best");
            pipeline::g2p1best_lexicon(&read_lexicon(&a.lexicon)?)?
        }
    };
    write_results(&results, &a.out)?;
    m.output("lexicon", &a.out);
    m.count(&results);
    write_manifest(&mut m, start, &a.out)
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = formats::parse_sim_config(&read(&a.config)?)
        .with_context(|| format!("invalid simulator config {}", a.config.display()))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let truth = read_lexicon(&a.truth)?;
    let candidates = read_lexicon(&a.candidates)?;
    let evidence = simulate_evidence(&candidates, &truth, &cfg)?;
    write(&a.out, &formats::write_evidence(evidence.values()))?;

    let mut m = RunManifest::new("simulate");
    m.set("confusability", float(cfg.confusability.default));
    for (w, k) in &cfg.confusability.per_word {
        m.set(&format!("confusability.{w}"), float(*k));
    }
    m.set("noise", cfg.noise);
    m.set("utterances_per_word", cfg.utterances.default);
    for (w, n) in &cfg.utterances.per_word {
        m.set(&format!("utterances.{w}"), *n);
    }
    m.set("seed", cfg.seed);
    m.set("delta", cfg.delta);
    m.input("truth", &a.truth);
    m.input("candidates", &a.candidates);
    m.input("config", &a.config);
    m.output("evidence", &a.out);
    m.words_processed = evidence.len();
    m.candidates_in = evidence.values().map(|e| e.n_candidates()).sum();
    m.candidates_out = m.candidates_in;
    write_manifest(&mut m, start, &a.out)
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let start = Instant::now();
    let learned = read_lexicon(&a.learned)?;
    let truth = read_lexicon(&a.truth)?;
    let report = evaluate(&learned, &truth)?;
    write(&a.out, &formats::write_eval_lines(&report))?;
    print!("{}", formats::write_eval_table(&report));

    let mut m = RunManifest::new("evaluate");
    m.input("learned", &a.learned);
    m.input("truth", &a.truth);
    m.output("report", &a.out);
    m.words_processed = report.per_word.len();
    m.candidates_in = learned.total_pronunciations();
    m.candidates_out = learned.total_pronunciations();
    m.set("truth-pronunciations", truth.total_pronunciations());
    write_manifest(&mut m, start, &a.out)
}
