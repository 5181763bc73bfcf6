use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lexlearn_core::{SelectionConfig, Source};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::pipeline::WordResult;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordCounts {
    pub candidates_in: usize,
    pub candidates_out: usize,
}

/// Record of one command invocation, written next to its main output as
/// `<out>.manifest` (JSON).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Every setting the command ran with, after defaults, config file and
    /// flags were combined.
    pub config: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub duration_secs: f64,
    pub words_processed: usize,
    pub candidates_in: usize,
    pub candidates_out: usize,
    pub per_word: BTreeMap<String, WordCounts>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn output(&mut self, name: &str, path: &Path) {
        self.outputs.insert(name.to_string(), path.to_path_buf());
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    /// Records every field of `cfg` under its command-line flag name.
    pub fn set_selection(&mut self, cfg: &SelectionConfig) {
        self.set("delta", cfg.delta);
        for s in Source::ALL {
            self.set(&format!("alpha-{}", s.tag()), cfg.alpha.get(s));
            self.set(&format!("beta-{}", s.tag()), cfg.beta.get(s));
        }
        self.set("top-k", cfg.top_k);
        self.set("em-tol", cfg.em.tol);
        self.set("em-max-iters", cfg.em.max_iters);
    }

    pub fn count(&mut self, results: &[WordResult]) {
        for r in results {
            self.per_word.insert(
                r.word.clone(),
                WordCounts {
                    candidates_in: r.candidates_in,
                    candidates_out: r.kept.len(),
                },
            );
        }
        self.words_processed = results.len();
        self.candidates_in = results.iter().map(|r| r.candidates_in).sum();
        self.candidates_out = results.iter().map(|r| r.kept.len()).sum();
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.duration_secs = elapsed.as_secs_f64();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data") + "\n"
    }

    /// `<out>.manifest`
    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_os_string();
        name.push(".manifest");
        PathBuf::from(name)
    }
}

/// Non-finite floats (JSON has none) are recorded as strings.
pub fn float(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}
