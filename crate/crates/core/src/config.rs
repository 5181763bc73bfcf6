use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lexicon::Source;

/// One value per candidate [`Source`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerSource<T> {
    pub g2p: T,
    pub pd: T,
    pub reference: T,
}

impl<T: Copy> PerSource<T> {
    pub fn uniform(value: T) -> Self {
        PerSource {
            g2p: value,
            pd: value,
            reference: value,
        }
    }

    pub fn get(&self, source: Source) -> T {
        match source {
            Source::G2P => self.g2p,
            Source::PhoneticDecoding => self.pd,
            Source::Reference => self.reference,
        }
    }

    pub fn set(&mut self, source: Source, value: T) {
        match source {
            Source::G2P => self.g2p = value,
            Source::PhoneticDecoding => self.pd = value,
            Source::Reference => self.reference = value,
        }
    }
}

/// EM stopping rule: stop once the log-likelihood moves by less than `tol`,
/// or after `max_iters` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 200,
            tol: 1e-10,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("em_max_iters must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "em_tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Knobs of the selection pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    /// Floor applied to every conditional likelihood.
    pub delta: f64,
    /// Threshold scale per source; 0 disables pruning for that source.
    pub alpha: PerSource<f64>,
    /// Count smoothing added to `M_w` in the score denominator.
    pub beta: PerSource<f64>,
    pub top_k: usize,
    pub rel_freq_threshold: f64,
    pub em: EmConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            delta: 1e-5,
            alpha: PerSource {
                g2p: 0.02,
                pd: 0.01,
                reference: 0.0,
            },
            beta: PerSource {
                g2p: 10.0,
                pd: 10.0,
                reference: 0.0,
            },
            top_k: 10,
            rel_freq_threshold: 0.1,
            em: EmConfig::default(),
        }
    }
}

/// Recommended range for `delta`; values outside only produce a warning.
pub const DELTA_TYPICAL: (f64, f64) = (1e-7, 1e-5);

impl SelectionConfig {
    /// Threshold `T_s = -alpha_s * ln(delta)` for a source.
    pub fn threshold(&self, source: Source) -> f64 {
        -self.alpha.get(source) * libm::log(self.delta)
    }

    /// Validates hard bounds; returns soft warnings for atypical values.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.delta < DELTA_TYPICAL.0 || self.delta > DELTA_TYPICAL.1 {
            warnings.push(format!(
                "delta {} is outside the typical range [1e-7, 1e-5]",
                self.delta
            ));
        }
        for s in Source::ALL {
            let a = self.alpha.get(s);
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidConfig(format!(
                    "alpha for {s} must lie in [0, 1], got {a}"
                )));
            }
            let b = self.beta.get(s);
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "beta for {s} must be non-negative, got {b}"
                )));
            }
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be positive".into()));
        }
        if !(self.rel_freq_threshold > 0.0 && self.rel_freq_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rel_freq_threshold must lie in (0, 1), got {}",
                self.rel_freq_threshold
            )));
        }
        self.em.validate()?;
        Ok(warnings)
    }
}
