//! Independent oracles and random panel builders shared by the
//! integration tests. Nothing here goes through the recursion, the
//! difference-vector cache or the QP solver.
#![allow(dead_code)]

use binlogit::{IndividualSlice, PanelDataset};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random balanced panel; covariates uniform on [-2, 2], outcomes fair
/// coin flips. Individuals may be non-informative.
pub fn random_panel(rng: &mut impl Rng, n: usize, periods: usize, dim: usize) -> PanelDataset {
    let individuals = (0..n)
        .map(|i| {
            let xs = (0..periods)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let ys = (0..periods).map(|_| u8::from(rng.random_bool(0.5))).collect();
            IndividualSlice::new(i as i64 + 1, xs, ys).unwrap()
        })
        .collect();
    PanelDataset::from_individuals(individuals).unwrap()
}

/// Random panel in which every individual is informative.
pub fn random_informative_panel(rng: &mut impl Rng, n: usize, periods: usize, dim: usize) -> PanelDataset {
    assert!(periods >= 2);
    let individuals = (0..n)
        .map(|i| {
            let xs = (0..periods)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let k = rng.random_range(1..periods);
            let mut ys = vec![0u8; periods];
            let mut placed = 0;
            while placed < k {
                let t = rng.random_range(0..periods);
                if ys[t] == 0 {
                    ys[t] = 1;
                    placed += 1;
                }
            }
            IndividualSlice::new(i as i64 + 1, xs, ys).unwrap()
        })
        .collect();
    PanelDataset::from_individuals(individuals).unwrap()
}

pub fn random_beta(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// All binary masks of length `periods` with `ones` bits set, by brute
/// force over `0..2^T`.
pub fn masks(periods: usize, ones: usize) -> Vec<Vec<u8>> {
    (0u64..1 << periods)
        .filter(|m| m.count_ones() as usize == ones)
        .map(|m| (0..periods).map(|t| ((m >> t) & 1) as u8).collect())
        .collect()
}

pub fn attribute(slice: &IndividualSlice, d: &[u8]) -> Vec<f64> {
    let mut a = vec![0.0; slice.dim()];
    for (t, &dt) in d.iter().enumerate() {
        if dt == 1 {
            for (acc, x) in a.iter_mut().zip(slice.row(t)) {
                *acc += x;
            }
        }
    }
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_{d ∈ B_i} exp(a(d)'β)` by enumerating every mask, in plain
/// (unshifted) floating point. Only meaningful for moderate indices.
pub fn brute_denominator(slice: &IndividualSlice, beta: &[f64]) -> f64 {
    masks(slice.num_periods(), slice.choice_total())
        .iter()
        .map(|d| dot(&attribute(slice, d), beta).exp())
        .sum()
}

/// Conditional log-likelihood by brute-force enumeration.
pub fn brute_loglik(data: &PanelDataset, beta: &[f64]) -> f64 {
    data.individuals()
        .iter()
        .map(|s| dot(&attribute(s, s.outcomes()), beta) - brute_denominator(s, beta).ln())
        .sum()
}

/// Central differences of `f` with step `h`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|j| {
            let mut up = at.to_vec();
            let mut dn = at.to_vec();
            up[j] += h;
            dn[j] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a vector field, row `j` = d/dβ_j.
pub fn central_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, at: &[f64], h: f64) -> DMatrix<f64> {
    let p = at.len();
    let mut jac = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut up = at.to_vec();
        let mut dn = at.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (fu, fd) = (f(&up), f(&dn));
        for i in 0..p {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    jac
}

/// Scalar-covariate difference values `Σ_t (d_t − y_t) x_t` over every
/// informative individual, by brute-force masks.
pub fn scalar_differences(data: &PanelDataset) -> Vec<f64> {
    let mut out = Vec::new();
    for s in data.individuals() {
        let ay = attribute(s, s.outcomes())[0];
        for d in masks(s.num_periods(), s.choice_total()) {
            out.push(attribute(s, &d)[0] - ay);
        }
    }
    out
}

/// For `p = 1`: separated iff every nonzero difference has the same weak
/// sign (and at least one is nonzero).
pub fn sign_oracle_separated(diffs: &[f64]) -> Option<bool> {
    let pos = diffs.iter().any(|&v| v > 0.0);
    let neg = diffs.iter().any(|&v| v < 0.0);
    if !pos && !neg {
        return None;
    }
    Some(!(pos && neg))
}

/// Grid oracle for the pooled criterion with one covariate: does some
/// nonzero `(b0, b)` on a fine circle of directions satisfy
/// `(2y − 1)(b0 + b x) ≥ −slack` at every row?
pub fn pooled_grid_separated(rows: &[(u8, f64)], steps: usize, slack: f64) -> bool {
    (0..steps).any(|k| {
        let th = std::f64::consts::TAU * k as f64 / steps as f64;
        let (b0, b) = (th.cos(), th.sin());
        rows.iter()
            .all(|&(y, x)| (if y == 1 { 1.0 } else { -1.0 }) * (b0 + b * x) >= -slack)
    })
}

/// Singular values by a dense SVD of the fully assembled centered matrix.
pub fn dense_centered_singular_values(data: &PanelDataset, beta: &[f64]) -> Vec<f64> {
    let p = data.dim();
    let mut rows = Vec::new();
    for s in data.individuals() {
        let alts = masks(s.num_periods(), s.choice_total());
        let attrs: Vec<Vec<f64>> = alts.iter().map(|d| attribute(s, d)).collect();
        let w: Vec<f64> = attrs.iter().map(|a| dot(a, beta).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut mean = vec![0.0; p];
        for (a, wj) in attrs.iter().zip(&w) {
            for (m, x) in mean.iter_mut().zip(a) {
                *m += wj / total * x;
            }
        }
        for a in &attrs {
            rows.extend(a.iter().zip(&mean).map(|(x, m)| x - m));
        }
    }
    let m = DMatrix::from_row_slice(rows.len() / p, p, &rows);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
