//! Brute-force re-implementation of greedy selection, used as a cross-check.
//!
//! Shares no numeric code with [`crate::em`] or [`crate::selector`]: the data
//! is held column-major, single-column optima are closed form, two-column
//! optima come from a golden-section search over the (concave) 1-D
//! objective, and larger sets run a log-domain EM.

use alloc::vec::Vec;

use crate::config::SelectionConfig;
use crate::em::PronModel;
use crate::error::{Error, Result};
use crate::evidence::EvidenceMatrix;
use crate::lexicon::{CandidateSet, Pronunciation, Source};
use crate::selector::{SelectionStep, SelectionTrace};

const REENTRY_SLACK: f64 = 1e-6;

/// Largest candidate count accepted by [`brute_force_select`].
pub const BRUTE_FORCE_CAP: usize = 12;

fn column(ev: &EvidenceMatrix, b: usize) -> Vec<f64> {
    (0..ev.n_utterances()).map(|u| ev.get(u, b)).collect()
}

/// Objective of a two-column mixture with weight `t` on the first column.
pub fn pair_objective(a: &[f64], c: &[f64], t: f64) -> f64 {
    a.iter().zip(c).map(|(&x, &y)| libm::log(t * x + (1.0 - t) * y)).sum()
}

/// Maximizes [`pair_objective`] over `t` in [0, 1]. Returns `(t*, L*)`.
pub fn pair_optimum(a: &[f64], c: &[f64]) -> (f64, f64) {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = pair_objective(a, c, x1);
    let mut f2 = pair_objective(a, c, x2);
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = pair_objective(a, c, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = pair_objective(a, c, x1);
        }
    }
    let mut best = ((lo + hi) / 2.0, pair_objective(a, c, (lo + hi) / 2.0));
    for t in [0.0, 1.0] {
        let f = pair_objective(a, c, t);
        if f > best.1 {
            best = (t, f);
        }
    }
    best
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + libm::log(v.iter().map(|x| libm::exp(x - m)).sum::<f64>())
}

/// EM in the log domain over column-major data. Returns `(theta, L)`.
#[allow(clippy::needless_range_loop)]
fn log_domain_em(cols: &[Vec<f64>], max_iters: usize, tol: f64) -> (Vec<f64>, f64) {
    let k = cols.len();
    let m = cols[0].len();
    let log_tau: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|&x| libm::log(x)).collect()).collect();
    let mut log_theta = alloc::vec![-libm::log(k as f64); k];
    let mut joint = alloc::vec![0.0; k];

    let objective = |log_theta: &[f64], joint: &mut [f64]| -> f64 {
        (0..m)
            .map(|u| {
                for b in 0..k {
                    joint[b] = log_tau[b][u] + log_theta[b];
                }
                log_sum_exp(joint)
            })
            .sum()
    };

    let mut ll = objective(&log_theta, &mut joint);
    for _ in 0..max_iters {
        let mut counts = alloc::vec![0.0; k];
        for u in 0..m {
            for b in 0..k {
                joint[b] = log_tau[b][u] + log_theta[b];
            }
            let norm = log_sum_exp(&joint);
            for b in 0..k {
                counts[b] += libm::exp(joint[b] - norm);
            }
        }
        let total: f64 = counts.iter().sum();
        for b in 0..k {
            log_theta[b] = libm::log(counts[b] / total);
        }
        let new_ll = objective(&log_theta, &mut joint);
        let done = (new_ll - ll).abs() < tol;
        ll = new_ll;
        if done {
            break;
        }
    }
    (log_theta.iter().map(|&l| libm::exp(l)).collect(), ll)
}

/// Optimal objective (and weights) for the given columns.
pub fn optimum(cols: &[Vec<f64>], max_iters: usize, tol: f64) -> (Vec<f64>, f64) {
    match cols.len() {
        1 => (alloc::vec![1.0], cols[0].iter().map(|&x| libm::log(x)).sum()),
        2 => {
            let (t, ll) = pair_optimum(&cols[0], &cols[1]);
            (alloc::vec![t, 1.0 - t], ll)
        }
        _ => log_domain_em(cols, max_iters, tol),
    }
}

/// Independent re-implementation of the greedy loop (same scoring, tie and
/// last-candidate rules as [`crate::selector::greedy_select`]).
pub fn brute_force_select(ev: &EvidenceMatrix, sources: &[Source], cfg: &SelectionConfig) -> Result<SelectionTrace> {
    let n = ev.n_candidates();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooManyCandidates {
            count: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if sources.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: sources.len(),
        });
    }
    crate::selector::check_distinct(ev)?;
    cfg.validate()?;

    let cols: Vec<Vec<f64>> = (0..n).map(|b| column(ev, b)).collect();
    let m_w = ev.n_utterances() as f64;
    let ln_delta = libm::log(cfg.delta);
    let (iters, tol) = (cfg.em.max_iters, cfg.em.tol);

    let mut alive = alloc::vec![true; n];
    let mut last = alloc::vec![f64::INFINITY; n];
    let mut steps = Vec::new();
    let mut guard = false;

    loop {
        let idx: Vec<usize> = (0..n).filter(|&b| alive[b]).collect();
        if idx.len() == 1 {
            guard = !steps.is_empty() && last[idx[0]] < 0.0;
            break;
        }
        let current: Vec<Vec<f64>> = idx.iter().map(|&b| cols[b].clone()).collect();
        let (_, l_star) = optimum(&current, iters, tol);

        let mut worst: Option<(usize, f64)> = None;
        for &b in &idx {
            let others: Vec<Vec<f64>> = idx.iter().filter(|&&c| c != b).map(|&c| cols[c].clone()).collect();
            let (w, l_b) = optimum(&others, iters, tol);
            // does column b pull weight at the optimum without it?
            let mut pull = 0.0;
            for u in 0..cols[b].len() {
                let mut mix = 0.0;
                for (col, wc) in others.iter().zip(&w) {
                    mix += col[u] * wc;
                }
                pull += cols[b][u] / mix;
            }
            let s = sources[b];
            let dl = if pull / m_w <= 1.0 + REENTRY_SLACK {
                0.0
            } else if l_star > l_b {
                l_star - l_b
            } else {
                0.0
            };
            let q = dl / (m_w + cfg.beta.get(s)) + cfg.alpha.get(s) * ln_delta;
            last[b] = q;
            worst = match worst {
                None => Some((b, q)),
                Some((wb, wq)) => {
                    if q < wq || (q == wq && ev.candidates()[b] < ev.candidates()[wb]) {
                        Some((b, q))
                    } else {
                        Some((wb, wq))
                    }
                }
            };
        }
        let (wb, wq) = worst.expect("at least two candidates");
        if wq >= 0.0 {
            break;
        }
        alive[wb] = false;
        steps.push(SelectionStep {
            removed: Pronunciation::new(ev.candidates()[wb].clone(), sources[wb])?,
            score: wq,
            remaining: idx.len() - 1,
        });
    }

    let idx: Vec<usize> = (0..n).filter(|&b| alive[b]).collect();
    let current: Vec<Vec<f64>> = idx.iter().map(|&b| cols[b].clone()).collect();
    let (theta, ll) = optimum(&current, iters, tol);
    let sum: f64 = theta.iter().sum();
    let theta = PronModel::new(theta.iter().map(|t| t / sum).collect())?;
    Ok(SelectionTrace {
        word: ev.word().into(),
        steps,
        final_set: CandidateSet::new(
            ev.word(),
            idx.iter()
                .map(|&b| Pronunciation::new(ev.candidates()[b].clone(), sources[b]))
                .collect::<Result<Vec<_>>>()?,
        )?,
        final_theta: theta,
        final_scores: idx.iter().map(|&b| last[b]).collect(),
        log_likelihood: ll,
        guard_triggered: guard,
    })
}
