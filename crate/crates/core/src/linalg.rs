//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{KdrError, Result};

/// Eigenpairs of a symmetric matrix ordered by decreasing `key(eigenvalue)`.
///
/// Ties keep the eigensolver's index order (stable sort).
pub fn sorted_symmetric_eigen(
    a: &DMatrix<f64>,
    key: impl Fn(f64) -> f64,
) -> (Vec<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| key(eig.eigenvalues[j]).total_cmp(&key(eig.eigenvalues[i])));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Sample standard deviation of each column with the `n - 1` denominator.
pub fn column_sds(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows();
    let means = column_means(x);
    DVector::from_iterator(
        x.ncols(),
        x.column_iter().enumerate().map(|(j, c)| {
            let ss: f64 = c.iter().map(|v| (v - means[j]).powi(2)).sum();
            (ss / (n as f64 - 1.0)).sqrt()
        }),
    )
}

/// Subtracts the column means in place.
pub fn center_columns(x: &mut DMatrix<f64>) {
    let means = column_means(x);
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
}

const SINGULAR_RATIO: f64 = 1e-9;

/// Whitening transform of `x`: returns `(Z, S)` with `Z = (X - mean) S`
/// and `S = Sigma^{-1/2}` for the (1/n) sample covariance `Sigma`.
///
/// A ridge of `1e-10 * trace(Sigma) / m` is added before the eigensolve;
/// the covariance still counts as singular when its condition number
/// exceeds `1 / SINGULAR_RATIO`.
pub fn whiten(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = x.shape();
    let mut xc = x.clone();
    center_columns(&mut xc);
    let mut cov = xc.transpose() * &xc / n as f64;
    let jitter = 1e-10 * cov.trace() / m as f64;
    for i in 0..m {
        cov[(i, i)] += jitter;
    }
    let eig = cov.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if max_ev <= 0.0 || eig.eigenvalues.iter().any(|&l| l <= max_ev * SINGULAR_RATIO) {
        return Err(KdrError::Numeric("covariate covariance is singular".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let s = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Ok((xc * &s, s))
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `max |B^T B - I|`.
pub fn orthonormality_error(b: &DMatrix<f64>) -> f64 {
    let mut g = b.transpose() * b;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    max_abs(&g)
}
