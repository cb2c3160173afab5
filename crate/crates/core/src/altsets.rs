//! Alternative sets `B_i`: every outcome sequence with the same number of
//! ones as the observed one, the attribute gaps against the observed
//! sequence, and the recursive denominator of the conditional likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{IndividualSlice, PanelDataset};

/// Largest alternative set that will be materialized.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 1_000_000;

/// `C(n, k)`, or `None` on `u64` overflow.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

/// Lexicographically ordered list of all binary vectors of length
/// `periods` with exactly `ones` entries equal to one.
pub fn enumerate_alternatives(periods: usize, ones: usize, guard: u64) -> Result<Vec<Vec<u8>>> {
    if ones > periods {
        return Err(Error::contract(format!("k = {ones} exceeds T = {periods}")));
    }
    let size = match binomial(periods, ones) {
        Some(s) if s <= guard => s,
        _ => {
            return Err(Error::AlternativeSetTooLarge {
                periods,
                ones,
                guard,
            })
        }
    };
    let mut current = vec![0u8; periods];
    for d in current.iter_mut().skip(periods - ones) {
        *d = 1;
    }
    let mut out = Vec::with_capacity(size as usize);
    loop {
        out.push(current.clone());
        if !next_permutation(&mut current) {
            break;
        }
    }
    debug_assert_eq!(out.len() as u64, size);
    Ok(out)
}

/// Advances to the next lexicographic permutation; `false` once the
/// sequence is the last one.
fn next_permutation(v: &mut [u8]) -> bool {
    let Some(i) = (0..v.len().saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// `B_i` for one individual.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativeSet {
    pub owner: usize,
    pub sequences: Vec<Vec<u8>>,
    /// Position of the observed outcome sequence in `sequences`.
    pub observed: usize,
}

impl AlternativeSet {
    pub fn build(owner: usize, slice: &IndividualSlice, guard: u64) -> Result<Self> {
        let sequences =
            enumerate_alternatives(slice.num_periods(), slice.choice_total(), guard)?;
        let observed = sequences
            .binary_search_by(|d| d.as_slice().cmp(slice.outcomes()))
            .expect("observed sequence belongs to its alternative set");
        Ok(AlternativeSet {
            owner,
            sequences,
            observed,
        })
    }

    /// `r_ni`.
    pub fn size(&self) -> usize {
        self.sequences.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceVector {
    pub owner: usize,
    pub alt_index: usize,
    /// `Σ_t (d_t − y_t) x_t`
    pub v: Vec<f64>,
}

/// One difference vector per alternative, in enumeration order. The entry
/// at the observed sequence is exactly zero.
pub fn difference_vectors(
    owner: usize,
    slice: &IndividualSlice,
    guard: u64,
) -> Result<Vec<DifferenceVector>> {
    let set = AlternativeSet::build(owner, slice, guard)?;
    let y = slice.outcomes();
    Ok(set
        .sequences
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let mut v = vec![0.0; slice.dim()];
            for t in 0..d.len() {
                let sign = match (d[t], y[t]) {
                    (1, 0) => 1.0,
                    (0, 1) => -1.0,
                    _ => continue,
                };
                for (acc, x) in v.iter_mut().zip(slice.row(t)) {
                    *acc += sign * x;
                }
            }
            DifferenceVector {
                owner,
                alt_index: j,
                v,
            }
        })
        .collect())
}

/// `Σ_{d ∈ B_i} exp(Σ_t d_t x_t'β)` kept on the log scale, with the
/// softmax-weighted mean attribute, which is the gradient of its log.
#[derive(Debug, Clone, PartialEq)]
pub struct Denominator {
    pub log_value: f64,
    pub mean_attribute: Vec<f64>,
}

impl Denominator {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// Gradient of the denominator itself (not of its log).
    pub fn gradient(&self) -> Vec<f64> {
        let scale = self.value();
        self.mean_attribute.iter().map(|m| m * scale).collect()
    }
}

/// Evaluates the denominator by the recursion
/// `f(t, m) = f(t−1, m) + f(t−1, m−1)·exp(x_t'β)` on log-scaled accumulators.
/// Runs in `O(T k p)` without materializing `B_i`.
pub fn denominator_dp(slice: &IndividualSlice, beta: &[f64]) -> Result<Denominator> {
    let p = slice.dim();
    if beta.len() != p {
        return Err(Error::contract(format!(
            "β has length {}, expected {p}",
            beta.len()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::contract("β must be finite"));
    }
    let k = slice.choice_total();
    let mut log_f = vec![f64::NEG_INFINITY; k + 1];
    log_f[0] = 0.0;
    let mut mean = vec![vec![0.0; p]; k + 1];
    for (t, x) in slice.rows().enumerate() {
        let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        for m in (1..=k.min(t + 1)).rev() {
            let keep = log_f[m];
            let take = log_f[m - 1] + eta;
            let top = keep.max(take);
            let new = top + ((keep - top).exp() + (take - top).exp()).ln();
            let w_keep = if keep == f64::NEG_INFINITY { 0.0 } else { (keep - new).exp() };
            let w_take = (take - new).exp();
            let (lo, hi) = mean.split_at_mut(m);
            for ((acc, prev), xj) in hi[0].iter_mut().zip(&lo[m - 1]).zip(x) {
                *acc = w_keep * *acc + w_take * (prev + xj);
            }
            log_f[m] = new;
        }
    }
    Ok(Denominator {
        log_value: log_f[k],
        mean_attribute: mean.swap_remove(k),
    })
}

/// Difference vectors of every informative individual, enumerated once and
/// reused by the rank check, the detector QP and the Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDifferences {
    dim: usize,
    owners: Vec<usize>,
    groups: Vec<Vec<Vec<f64>>>,
    rows: usize,
}

impl PanelDifferences {
    pub fn build(data: &PanelDataset, guard: u64) -> Result<Self> {
        let mut owners = Vec::new();
        let mut groups = Vec::new();
        let mut rows = 0usize;
        for (i, slice) in data.individuals().iter().enumerate() {
            if !slice.is_informative() {
                rows += 1;
                continue;
            }
            let dv = difference_vectors(i, slice, guard)?;
            rows += dv.len();
            owners.push(i);
            groups.push(dv.into_iter().map(|d| d.v).collect());
        }
        Ok(PanelDifferences {
            dim: data.dim(),
            owners,
            groups,
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `r_n`, counting a singleton set for each non-informative individual.
    pub fn total_rows(&self) -> usize {
        self.rows
    }

    /// Per informative individual: `(index in the panel, its vectors)`.
    pub fn groups(&self) -> impl Iterator<Item = (usize, &[Vec<f64>])> {
        self.owners.iter().copied().zip(self.groups.iter().map(Vec::as_slice))
    }

    pub fn vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.groups.iter().flatten()
    }
}

/// Softmax weights of `v_j'β` over one alternative set and the log of the
/// normalizer `Σ_j exp(v_j'β)`.
pub fn softmax_weights(vectors: &[Vec<f64>], beta: &[f64]) -> (Vec<f64>, f64) {
    let scores: Vec<f64> = vectors
        .iter()
        .map(|v| v.iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (weights, top + total.ln())
}
