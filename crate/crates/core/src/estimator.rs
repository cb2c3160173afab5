//! Conditional maximum likelihood for the fixed-effects binary logit.
//!
//! Conditioning on each individual's number of ones removes the fixed
//! effect; the remaining likelihood of individual `i` is the softmax
//! probability of the observed sequence within its alternative set. The
//! value is computed by the denominator recursion, the score and Hessian by
//! enumeration, and the maximizer by damped Newton from `β = 0`, behind the
//! existence gate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::altsets::{denominator_dp, softmax_weights, PanelDifferences, DEFAULT_ENUMERATION_GUARD};
use crate::detector::{detect_panel_separation, DetectOptions, ExistenceReport, Status};
use crate::error::{Error, Result};
use crate::linalg::{inverse_spd, solve_spd};
use crate::panel::PanelDataset;
use crate::qp::dot;

/// `log L(β)`: sum over informative individuals of
/// `Σ_t y_t x_t'β − log Σ_{d ∈ B_i} exp(Σ_t d_t x_t'β)`.
pub fn conditional_loglik(data: &PanelDataset, beta: &[f64]) -> Result<f64> {
    check_beta(data, beta)?;
    let mut total = 0.0;
    for s in data.informative_individuals() {
        let den = denominator_dp(s, beta)?;
        total += dot(&s.observed_attribute(), beta) - den.log_value;
    }
    Ok(total)
}

/// Score and Hessian of the conditional log-likelihood. The Hessian is
/// minus the sum of within-set covariances of the attribute vectors.
pub fn conditional_score_and_hessian(
    data: &PanelDataset,
    beta: &[f64],
    guard: u64,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_beta(data, beta)?;
    let diffs = PanelDifferences::build(data, guard)?;
    Ok(score_and_hessian_prepared(&diffs, beta))
}

pub(crate) fn score_and_hessian_prepared(diffs: &PanelDifferences, beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let p = diffs.dim();
    let mut score = vec![0.0; p];
    let mut hess = DMatrix::zeros(p, p);
    let mut mean = vec![0.0; p];
    for (_, vs) in diffs.groups() {
        let (w, _) = softmax_weights(vs, beta);
        mean.iter_mut().for_each(|m| *m = 0.0);
        for (v, wj) in vs.iter().zip(&w) {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += wj * x;
            }
        }
        // attribute gaps are attributes shifted by the observed one, so
        // their mean is E[a] − a_y and their covariance is Cov(a)
        for (s, m) in score.iter_mut().zip(&mean) {
            *s -= m;
        }
        for (v, wj) in vs.iter().zip(&w) {
            for a in 0..p {
                let da = v[a] - mean[a];
                for b in 0..=a {
                    hess[(a, b)] -= wj * da * (v[b] - mean[b]);
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            hess[(b, a)] = hess[(a, b)];
        }
    }
    (score, hess)
}

fn check_beta(data: &PanelDataset, beta: &[f64]) -> Result<()> {
    if beta.len() != data.dim() {
        return Err(Error::contract(format!(
            "β has length {}, expected p = {}",
            beta.len(),
            data.dim()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::contract("β must be finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Estimate even when the gate says the maximizer does not exist.
    pub force: bool,
    /// Sup-norm of the score at which Newton stops, after one more step.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub detect: DetectOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            force: false,
            grad_tol: 1e-8,
            max_iter: 100,
            armijo: 1e-4,
            detect: DetectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loglik: f64,
    pub gradient_norm: f64,
    pub step_length: f64,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmleFit {
    pub beta_hat: Vec<f64>,
    /// `None` where the observed information is not invertible.
    pub std_errors: Vec<Option<f64>>,
    pub loglik: f64,
    /// Sup-norm of the score at `beta_hat`.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// First-order condition met on data that passed the gate.
    pub converged: bool,
    /// Estimated on data the gate rejected; the numbers carry no meaning
    /// beyond the fact that no maximizer exists.
    pub spurious: bool,
    pub beta_norm: f64,
    pub trace: Vec<IterationRecord>,
    pub gate: ExistenceReport,
}

/// Gated Newton fit. Refuses with the existence report unless the gate
/// passes or `force` is set.
pub fn fit(data: &PanelDataset, opts: &FitOptions) -> Result<CmleFit> {
    let gate = detect_panel_separation(data, &opts.detect)?;
    if !opts.force {
        match gate.status {
            Status::ExistsUnique => {}
            Status::Separated => return Err(Error::Separated(Box::new(gate))),
            Status::RankDeficient => return Err(Error::RankDeficient(Box::new(gate))),
        }
    }
    let subset = data.informative_subset()?.data;
    let guard = if opts.detect.guard == 0 {
        DEFAULT_ENUMERATION_GUARD
    } else {
        opts.detect.guard
    };
    let diffs = PanelDifferences::build(&subset, guard)?;
    let p = data.dim();

    let mut beta = vec![0.0; p];
    let mut loglik = conditional_loglik(&subset, &beta)?;
    let (mut score, mut hess) = score_and_hessian_prepared(&diffs, &beta);
    let mut trace = vec![IterationRecord {
        iteration: 0,
        loglik,
        gradient_norm: sup_norm(&score),
        step_length: 0.0,
        ridge: 0.0,
    }];
    let mut iterations = 0;
    // one extra step once the tolerance is met: inside the quadratic basin
    // it takes the error in β̂ from about |score|/curvature to rounding level
    let mut polished = false;

    while iterations < opts.max_iter {
        if sup_norm(&score) <= opts.grad_tol {
            if polished {
                break;
            }
            polished = true;
        }
        let info = -&hess;
        let (step, ridge) = newton_step(&info, &score);
        let slope = dot(&score, &step);
        if slope.is_nan() || slope <= 0.0 {
            break;
        }
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + alpha * s).collect();
            if cand.iter().all(|v| v.is_finite()) {
                let delta: Vec<f64> = step.iter().map(|s| alpha * s).collect();
                let gain = loglik_increment(&diffs, &beta, &delta);
                if gain >= opts.armijo * alpha * slope {
                    next = Some((cand, loglik + gain));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((cand, ll)) = next else {
            // no ascent representable in double precision
            break;
        };
        beta = cand;
        loglik = ll;
        (score, hess) = score_and_hessian_prepared(&diffs, &beta);
        iterations += 1;
        trace.push(IterationRecord {
            iteration: iterations,
            loglik,
            gradient_norm: sup_norm(&score),
            step_length: alpha,
            ridge,
        });
    }

    let gradient_norm = sup_norm(&score);
    let loglik = conditional_loglik(&subset, &beta)?;
    let std_errors = match inverse_spd(&(-&hess)) {
        Some(inv) => (0..p)
            .map(|j| {
                let v = inv[(j, j)];
                (v > 0.0 && v.is_finite()).then(|| v.sqrt())
            })
            .collect(),
        None => vec![None; p],
    };
    let spurious = !gate.exists();
    Ok(CmleFit {
        beta_norm: dot(&beta, &beta).sqrt(),
        beta_hat: beta,
        std_errors,
        loglik,
        gradient_norm,
        iterations,
        converged: gradient_norm <= opts.grad_tol && !spurious,
        spurious,
        trace,
        gate,
    })
}

/// `log L(β + δ) − log L(β)` without subtracting two nearly equal sums:
/// per individual `−log1p(Σ_j w_j expm1(v_j'δ))` with `w` the softmax
/// weights at `β`, so increments far below the rounding of `log L` itself
/// still have the correct sign.
pub(crate) fn loglik_increment(diffs: &PanelDifferences, beta: &[f64], delta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (_, vs) in diffs.groups() {
        let shifts: Vec<f64> = vs.iter().map(|v| dot(v, delta)).collect();
        if shifts.iter().all(|d| d.abs() < 1.0) {
            let (w, _) = softmax_weights(vs, beta);
            let s: f64 = w.iter().zip(&shifts).map(|(wj, d)| wj * d.exp_m1()).sum();
            total -= s.ln_1p();
        } else {
            let moved: Vec<f64> = beta.iter().zip(delta).map(|(b, d)| b + d).collect();
            let (_, before) = softmax_weights(vs, beta);
            let (_, after) = softmax_weights(vs, &moved);
            total -= after - before;
        }
    }
    total
}

/// Solves `(info + ridge·I) step = score`, adding a ridge only when the
/// observed information is numerically singular.
fn newton_step(info: &DMatrix<f64>, score: &[f64]) -> (Vec<f64>, f64) {
    if let Some(step) = solve_spd(info, score) {
        return (step, 0.0);
    }
    let p = info.nrows();
    let scale = (info.trace() / p as f64).abs();
    let mut ridge = 1e-8 * if scale > 0.0 { scale } else { 1.0 };
    loop {
        let damped = info + DMatrix::identity(p, p) * ridge;
        if let Some(step) = solve_spd(&damped, score) {
            return (step, ridge);
        }
        ridge *= 10.0;
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
