//! Minimization of `|Σ_k λ_k w_k|²` subject to `λ_k ≥ 1`.
//!
//! The feasible region is a translated orthant, so projection is the
//! coordinate-wise `max(λ, 1)`. The solver is a projected gradient method
//! with Barzilai-Borwein trial steps and Armijo backtracking along the
//! projection arc.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpOptions {
    /// Stop as soon as the objective falls to this value.
    pub tol: f64,
    pub max_iter: u64,
    /// Stationarity threshold on the projected gradient, relative to `|u|`.
    pub kkt_rel: f64,
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            tol: 1e-8,
            max_iter: 100_000,
            kkt_rel: 1e-10,
            armijo: 1e-4,
            shrink: 0.5,
        }
    }
}

/// Unit-normalized, deduplicated constraint vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub objective: f64,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: u64,
}

impl QpProblem {
    /// Drops exact zero vectors, normalizes the rest and removes duplicates.
    pub fn new(dim: usize, raw: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut vectors: Vec<Vec<f64>> = raw
            .into_iter()
            .filter_map(|v| {
                debug_assert_eq!(v.len(), dim);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
            })
            .collect();
        vectors.sort_by(|a, b| cmp_vec(a, b));
        vectors.dedup();
        QpProblem { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    fn combine(&self, lambda: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.dim];
        for (w, l) in self.vectors.iter().zip(lambda) {
            axpy(&mut u, *l, w);
        }
        u
    }

    /// `min_k w_k'd` for a direction `d`.
    pub fn min_support(&self, direction: &[f64]) -> f64 {
        self.vectors
            .iter()
            .map(|w| dot(w, direction))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, opts: &QpOptions) -> Result<QpSolution> {
        let n = self.vectors.len();
        let mut lambda = vec![1.0; n];
        let mut u = self.combine(&lambda);
        let mut f = dot(&u, &u);
        let mut grad = vec![0.0; n];
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut trial = vec![0.0; n];

        for iter in 0..opts.max_iter {
            if f <= opts.tol {
                return Ok(self.finish(lambda, iter));
            }
            for (g, w) in grad.iter_mut().zip(&self.vectors) {
                *g = 2.0 * dot(w, &u);
            }
            let unorm = f.sqrt();
            let stationary = lambda.iter().zip(&grad).all(|(&l, &g)| {
                let pg = if l > 1.0 { g } else { g.min(0.0) };
                pg.abs() <= 2.0 * opts.kkt_rel * unorm
            });
            if stationary {
                return Ok(self.finish(lambda, iter));
            }

            // Barzilai-Borwein step from the last accepted move, otherwise 1/L
            // with L = 2·Σ|w_k|² bounding the gradient's Lipschitz constant.
            let mut alpha = match &prev {
                Some((l0, g0)) => {
                    let (mut ss, mut sy) = (0.0, 0.0);
                    for k in 0..n {
                        let s = lambda[k] - l0[k];
                        ss += s * s;
                        sy += s * (grad[k] - g0[k]);
                    }
                    if sy > 0.0 {
                        (ss / sy).clamp(1e-12, 1e12)
                    } else {
                        1.0 / (2.0 * n as f64)
                    }
                }
                None => 1.0 / (2.0 * n as f64),
            };

            let mut accepted = false;
            let mut u_trial = vec![0.0; self.dim];
            let mut f_trial = f;
            for _ in 0..200 {
                let mut decrease = 0.0;
                u_trial.copy_from_slice(&u);
                for k in 0..n {
                    trial[k] = (lambda[k] - alpha * grad[k]).max(1.0);
                    let step = trial[k] - lambda[k];
                    if step != 0.0 {
                        decrease += grad[k] * step;
                        axpy(&mut u_trial, step, &self.vectors[k]);
                    }
                }
                f_trial = dot(&u_trial, &u_trial);
                if f_trial <= f + opts.armijo * decrease {
                    accepted = true;
                    break;
                }
                alpha *= opts.shrink;
            }
            if !accepted || f_trial >= f {
                // no representable descent left: the iterate is optimal to
                // working precision
                return Ok(self.finish(lambda, iter));
            }
            prev = Some((lambda.clone(), grad.clone()));
            std::mem::swap(&mut lambda, &mut trial);
            u = if iter % 64 == 63 {
                self.combine(&lambda)
            } else {
                u_trial
            };
            f = dot(&u, &u);
        }
        Err(Error::QpNotConverged {
            iterations: opts.max_iter,
        })
    }

    fn finish(&self, lambda: Vec<f64>, iterations: u64) -> QpSolution {
        let u = self.combine(&lambda);
        QpSolution {
            objective: dot(&u, &u),
            u,
            lambda,
            iterations,
        }
    }
}

fn cmp_vec(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_dedups() {
        let qp = QpProblem::new(2, vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![0.6, 0.8], vec![-1.0, 0.0]]);
        assert_eq!(qp.len(), 2);
        for w in qp.vectors() {
            assert!((dot(w, w) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn opposite_pair_cancels_immediately() {
        let qp = QpProblem::new(1, vec![vec![-1.0], vec![1.0]]);
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn single_vector_is_its_own_minimum() {
        let qp = QpProblem::new(1, vec![vec![-1.0]]);
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert_eq!(sol.objective, 1.0);
        assert_eq!(sol.u, vec![-1.0]);
    }

    #[test]
    fn cone_in_open_half_plane_is_separated() {
        // all vectors have positive first coordinate; optimum at λ = 1 for
        // the two extreme rays is not required, only a positive minimum
        let raw = vec![vec![1.0, 2.0], vec![1.0, -2.0], vec![1.0, 0.5], vec![2.0, -0.1]];
        let qp = QpProblem::new(2, raw);
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert!(sol.objective > 1e-3);
        let norm = sol.objective.sqrt();
        let dir: Vec<f64> = sol.u.iter().map(|x| x / norm).collect();
        assert!(qp.min_support(&dir) >= -1e-8);
    }

    #[test]
    fn positive_spanning_set_reaches_zero() {
        // three rays 120° apart, unequal weights needed after rescaling
        let raw = vec![vec![1.0, 0.0], vec![-0.2, 1.0], vec![-0.3, -1.0]];
        let qp = QpProblem::new(2, raw);
        let sol = qp.solve(&QpOptions::default()).unwrap();
        assert!(sol.objective <= 1e-8, "{}", sol.objective);
        assert!(sol.lambda.iter().all(|&l| l >= 1.0));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let raw = vec![vec![1.0, 0.0], vec![-0.2, 1.0], vec![-0.3, -1.0]];
        let qp = QpProblem::new(2, raw);
        let opts = QpOptions {
            max_iter: 1,
            ..QpOptions::default()
        };
        let err = qp.solve(&opts).unwrap_err();
        assert!(err.to_string().contains("QP did not converge"));
    }
}
