//! Maximum-likelihood pronunciation probabilities by EM.
//!
//! For one word with evidence `tau[u][b]`, the objective is
//!
//! ```text
//! L(theta) = sum_u ln( sum_b tau[u][b] * theta[b] )
//! ```
//!
//! Each iteration computes the posteriors
//! `lambda[u][b] = tau[u][b] theta[b] / sum_b' tau[u][b'] theta[b']` (E-step)
//! and re-estimates `theta[b] = sum_u lambda[u][b] / sum_u sum_b lambda[u][b]`
//! (M-step). The objective is concave in `theta`, so the fixed point reached
//! from a strictly positive start is the global maximum.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::EmConfig;
use crate::error::{Error, Result};
use crate::evidence::EvidenceMatrix;

/// Tolerance on the sum of a validated pronunciation model.
pub const MODEL_SUM_TOL: f64 = 1e-9;

/// Probability vector over a word's candidate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PronModel(Vec<f64>);

impl PronModel {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, actual: 0 });
        }
        if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidConfig(
                "pronunciation model has a negative or non-finite component".into(),
            ));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > MODEL_SUM_TOL {
            return Err(Error::InvalidConfig(alloc::format!(
                "pronunciation model sums to {sum}"
            )));
        }
        Ok(PronModel(theta))
    }

    pub fn uniform(n: usize) -> Self {
        PronModel(vec![1.0 / n as f64; n])
    }

    /// Unit mass on `index`.
    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        PronModel(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest component (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &t) in self.0.iter().enumerate() {
            if t > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub theta_star: PronModel,
    /// Objective at `theta_star`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_dims(ev: &EvidenceMatrix, theta: &[f64]) -> Result<()> {
    if theta.len() != ev.n_candidates() {
        return Err(Error::DimensionMismatch {
            expected: ev.n_candidates(),
            actual: theta.len(),
        });
    }
    Ok(())
}

/// Data log-likelihood of `theta` over every row of `ev`.
pub fn log_likelihood(ev: &EvidenceMatrix, theta: &PronModel) -> Result<f64> {
    check_dims(ev, theta.as_slice())?;
    Ok(log_likelihood_raw(ev, theta.as_slice()))
}

fn log_likelihood_raw(ev: &EvidenceMatrix, theta: &[f64]) -> f64 {
    ev.rows().map(|row| libm::log(dot(row, theta))).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One E-step followed by one M-step. Returns the updated model.
fn em_step(ev: &EvidenceMatrix, theta: &[f64], next: &mut [f64]) {
    next.iter_mut().for_each(|v| *v = 0.0);
    for row in ev.rows() {
        let mix = dot(row, theta);
        for ((acc, &t), &th) in next.iter_mut().zip(row).zip(theta) {
            *acc += t * th / mix;
        }
    }
    let total: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= total);
}

/// Runs EM from `theta0` under `cfg`, stopping when the objective changes by
/// less than `cfg.tol` or after `cfg.max_iters` iterations.
pub fn run_em(ev: &EvidenceMatrix, theta0: &PronModel, cfg: &EmConfig) -> Result<EmResult> {
    run_em_observed(ev, theta0, cfg, |_, _, _| {})
}

/// As [`run_em`], calling `observe(iteration, theta, log_likelihood)` after
/// every iteration (and once with iteration 0 for the start point).
pub fn run_em_observed<F>(ev: &EvidenceMatrix, theta0: &PronModel, cfg: &EmConfig, mut observe: F) -> Result<EmResult>
where
    F: FnMut(usize, &[f64], f64),
{
    check_dims(ev, theta0.as_slice())?;
    if let Some(i) = theta0.as_slice().iter().position(|&t| t <= 0.0) {
        return Err(Error::ZeroInitialProbability(i));
    }
    cfg.validate()?;

    let mut theta = theta0.as_slice().to_vec();
    let mut next = vec![0.0; theta.len()];
    let mut ll = log_likelihood_raw(ev, &theta);
    observe(0, &theta, ll);

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        em_step(ev, &theta, &mut next);
        core::mem::swap(&mut theta, &mut next);
        let new_ll = log_likelihood_raw(ev, &theta);
        observe(it, &theta, new_ll);
        iterations = it;
        let change = (new_ll - ll).abs();
        ll = new_ll;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(EmResult {
        theta_star: PronModel(theta),
        log_likelihood: ll,
        iterations,
        converged,
    })
}

/// EM from the uniform model, as every selection step does.
pub fn run_em_uniform(ev: &EvidenceMatrix, cfg: &EmConfig) -> Result<EmResult> {
    run_em(ev, &PronModel::uniform(ev.n_candidates()), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_phones, Phone};
    use alloc::format;

    const D: f64 = 1e-5;

    fn cands(n: usize) -> Vec<Vec<Phone>> {
        (0..n).map(|i| parse_phones(&format!("P{i}")).unwrap()).collect()
    }

    fn matrix(rows: &[Vec<f64>]) -> EvidenceMatrix {
        EvidenceMatrix::from_rows("w", cands(rows[0].len()), rows, D).unwrap()
    }

    #[test]
    fn single_candidate_closed_form() {
        let ev = matrix(&[vec![0.9], vec![0.7]]);
        let ll = log_likelihood(&ev, &PronModel::uniform(1)).unwrap();
        assert!((ll - (-0.46204)).abs() < 1e-5);
        assert!((ll - (libm::log(0.9) + libm::log(0.7))).abs() < 1e-15);

        let res = run_em_uniform(&ev, &EmConfig::default()).unwrap();
        assert_eq!(res.theta_star.as_slice(), &[1.0]);
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        assert!((res.log_likelihood - ll).abs() < 1e-15);
    }

    #[test]
    fn symmetric_two_by_two() {
        let ev = matrix(&[vec![1.0, D], vec![D, 1.0]]);
        // 2 ln((1 + delta) / 2), computed by hand
        let expected = 2.0 * libm::log(0.500005);
        assert!((expected - (-1.38627)).abs() < 1e-5);
        let ll = log_likelihood(&ev, &PronModel::uniform(2)).unwrap();
        assert!((ll - expected).abs() < 1e-12);

        let res = run_em_uniform(&ev, &EmConfig::default()).unwrap();
        for &t in res.theta_star.as_slice() {
            assert!((t - 0.5).abs() < 1e-15);
        }
        assert!((res.log_likelihood - expected).abs() < 1e-12);
    }

    #[test]
    fn one_hot_is_degenerate_mixture() {
        let ev = matrix(&[vec![0.3, 0.8], vec![0.6, 0.1], vec![D, 0.4]]);
        let ll = log_likelihood(&ev, &PronModel::one_hot(2, 1)).unwrap();
        let direct: f64 = [0.8, 0.1, 0.4].iter().map(|v: &f64| libm::log(*v)).sum();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn dominating_candidate_approaches_vertex() {
        for m in [1usize, 5, 50] {
            let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![D, 1.0, D]).collect();
            let ev = matrix(&rows);
            let res = run_em_uniform(&ev, &EmConfig::default()).unwrap();
            assert!(res.theta_star.as_slice()[1] >= 1.0 - 10.0 * D);
            assert!(res.log_likelihood >= -(m as f64) * 20.0 * D);
            assert!(res.log_likelihood <= 0.0);
        }
    }

    #[test]
    fn errors() {
        let ev = matrix(&[vec![0.5, 0.5]]);
        assert!(matches!(
            log_likelihood(&ev, &PronModel::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let zero = PronModel::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            run_em(&ev, &zero, &EmConfig::default()),
            Err(Error::ZeroInitialProbability(1))
        );
        assert!(PronModel::new(vec![0.5, 0.6]).is_err());
    }
}
