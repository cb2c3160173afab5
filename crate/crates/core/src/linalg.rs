//! Small dense linear-algebra helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

const CHUNK: usize = 2048;

/// Singular values (descending) of the matrix whose rows are streamed in.
/// Rows are folded into a running triangular factor with blocked QR, so the
/// full matrix is never held in memory.
pub fn singular_values_of_rows<I, R>(dim: usize, rows: I) -> Vec<f64>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut factor: Option<DMatrix<f64>> = None;
    let mut pending: Vec<f64> = Vec::with_capacity(CHUNK * dim);
    let fold = |factor: &mut Option<DMatrix<f64>>, pending: &mut Vec<f64>| {
        if pending.is_empty() {
            return;
        }
        let block = DMatrix::from_row_slice(pending.len() / dim, dim, pending);
        let stacked = match factor.take() {
            Some(r) => {
                let mut m = DMatrix::zeros(r.nrows() + block.nrows(), dim);
                m.rows_mut(0, r.nrows()).copy_from(&r);
                m.rows_mut(r.nrows(), block.nrows()).copy_from(&block);
                m
            }
            None => block,
        };
        *factor = Some(stacked.qr().r());
        pending.clear();
    };
    for row in rows {
        pending.extend_from_slice(row.as_ref());
        if pending.len() >= CHUNK * dim {
            fold(&mut factor, &mut pending);
        }
    }
    fold(&mut factor, &mut pending);
    let Some(r) = factor else {
        return vec![0.0; dim];
    };
    let mut sv: Vec<f64> = r.singular_values().iter().copied().collect();
    sv.resize(dim, 0.0);
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank with threshold `σ_max · max(rows, cols) · ε`.
pub fn numerical_rank(singular_values: &[f64], nrows: usize) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    let thresh = top * nrows.max(singular_values.len()) as f64 * f64::EPSILON;
    singular_values.iter().filter(|&&s| s > thresh).count()
}

pub fn to_matrix(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, entries)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `a x = b` for symmetric positive definite `a`; `None` when the
/// Cholesky factorization breaks down.
pub fn solve_spd(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let chol = a.clone().cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(b));
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

pub fn inverse_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = a.clone().cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}
