//! Gaussian RBF kernel `exp(-|z1 - z2|^2 / c)`, Gram matrices of projected
//! covariates, and double centering.

use nalgebra::DMatrix;

use crate::error::{KdrError, Result};
use crate::stiefel::StiefelPoint;

/// Linear decrease of the kernel scale `sigma^2` over the iterations of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub sigma_sq_start: f64,
    pub sigma_sq_end: f64,
}

impl Continuation {
    pub fn new(sigma_sq_start: f64, sigma_sq_end: f64) -> Result<Self> {
        if !(sigma_sq_end > 0.0 && sigma_sq_start >= sigma_sq_end && sigma_sq_start.is_finite()) {
            return Err(KdrError::InvalidConfig(format!(
                "continuation needs start >= end > 0, got {sigma_sq_start}:{sigma_sq_end}"
            )));
        }
        Ok(Continuation { sigma_sq_start, sigma_sq_end })
    }

    /// Scale used at iteration `t` of `total`.
    pub fn scale_at(&self, t: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.sigma_sq_end;
        }
        let frac = t as f64 / (total - 1) as f64;
        self.sigma_sq_start + (self.sigma_sq_end - self.sigma_sq_start) * frac
    }
}

impl Default for Continuation {
    fn default() -> Self {
        Continuation { sigma_sq_start: 100.0, sigma_sq_end: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    /// `c` of the covariate kernel, applied to `B^T x`.
    pub scale_x: f64,
    /// `c` of the response kernel.
    pub scale_y: f64,
    /// When present, overrides `scale_x` during descent.
    pub continuation: Option<Continuation>,
}

impl KernelConfig {
    pub fn new(scale_x: f64, scale_y: f64, continuation: Option<Continuation>) -> Result<Self> {
        check_scale(scale_x)?;
        check_scale(scale_y)?;
        if let Some(c) = continuation {
            Continuation::new(c.sigma_sq_start, c.sigma_sq_end)?;
        }
        Ok(KernelConfig { scale_x, scale_y, continuation })
    }

    /// Fixed scale `c` for both kernels, no continuation.
    pub fn fixed(c: f64) -> Result<Self> {
        KernelConfig::new(c, c, None)
    }

    /// Covariate scale at iteration `t` of `total`.
    pub fn scale_x_at(&self, t: usize, total: usize) -> f64 {
        match self.continuation {
            Some(c) => c.scale_at(t, total),
            None => self.scale_x,
        }
    }

    /// Covariate scale the final answer is judged at.
    pub fn final_scale_x(&self) -> f64 {
        match self.continuation {
            Some(c) => c.sigma_sq_end,
            None => self.scale_x,
        }
    }
}

fn check_scale(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(KdrError::InvalidConfig(format!("kernel scale must be positive, got {c}")))
    }
}

/// A symmetric `n x n` kernel matrix, optionally double-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    centered: bool,
}

impl GramMatrix {
    /// Wraps a symmetric matrix.
    pub fn from_matrix(entries: DMatrix<f64>, centered: bool) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(KdrError::Shape(format!("Gram matrix must be square, got {}x{}", n, entries.ncols())));
        }
        for i in 0..n {
            for j in 0..i {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(KdrError::Numeric(format!("Gram matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GramMatrix { entries, centered })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// `exp(-|z1 - z2|^2 / c)`.
pub fn rbf(z1: &[f64], z2: &[f64], c: f64) -> Result<f64> {
    check_scale(c)?;
    if z1.len() != z2.len() {
        return Err(KdrError::Shape(format!("vectors of length {} and {}", z1.len(), z2.len())));
    }
    let sq: f64 = z1.iter().zip(z2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-sq / c).exp())
}

/// Uncentered RBF Gram matrix of the rows of `z`.
///
/// Squared distances use `|a|^2 + |b|^2 - 2 a.b`, clamped at zero; the
/// diagonal is set to exactly one.
pub fn gram_rows(z: &DMatrix<f64>, c: f64) -> Result<GramMatrix> {
    check_scale(c)?;
    let n = z.nrows();
    let sq_norms: Vec<f64> = z.row_iter().map(|r| r.norm_squared()).collect();
    let inner = z * z.transpose();
    let mut k = DMatrix::from_element(n, n, 1.0);
    for j in 0..n {
        for i in 0..j {
            let d2 = (sq_norms[i] + sq_norms[j] - 2.0 * inner[(i, j)]).max(0.0);
            let v = (-d2 / c).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GramMatrix { entries: k, centered: false })
}

/// Gram matrix of the kernel `k(x, x') = exp(-|B^T (x - x')|^2 / c)` on the
/// rows of `x`.
pub fn gram_projected(x: &DMatrix<f64>, b: &StiefelPoint, c: f64) -> Result<GramMatrix> {
    if x.ncols() != b.ambient_dim() {
        return Err(KdrError::Shape(format!(
            "data has {} columns but projection has {} rows",
            x.ncols(),
            b.ambient_dim()
        )));
    }
    if x.nrows() < 2 {
        return Err(KdrError::InvalidConfig("need at least two observations".into()));
    }
    gram_rows(&(x * b.matrix()), c)
}

/// Double centering `H K H`, `H = I - 11^T / n`, computed as
/// `K_ij - rowmean_i - colmean_j + totalmean`.
pub fn center(k: &GramMatrix) -> GramMatrix {
    GramMatrix { entries: center_matrix(&k.entries), centered: true }
}

pub(crate) fn center_matrix(k: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = k.shape();
    let row_means: Vec<f64> = k.row_iter().map(|r| r.sum() / cols as f64).collect();
    let col_means: Vec<f64> = k.column_iter().map(|c| c.sum() / rows as f64).collect();
    let total = row_means.iter().sum::<f64>() / rows as f64;
    let mut g = DMatrix::from_fn(rows, cols, |i, j| k[(i, j)] - row_means[i] - col_means[j] + total);
    // Symmetric input gives a symmetric result up to rounding; make it exact.
    if rows == cols {
        for j in 0..cols {
            for i in 0..j {
                let v = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
    }
    g
}

/// Centered Gram matrix of the responses (rows of `y`) with scale `c`.
pub fn response_gram(y: &DMatrix<f64>, c: f64) -> Result<GramMatrix> {
    if y.nrows() < 2 {
        return Err(KdrError::InvalidConfig("need at least two observations".into()));
    }
    Ok(center(&gram_rows(y, c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::stiefel::retract;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const E_INV: f64 = 0.36787944117144233;

    fn normal_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf(&[0.3, -1.0], &[0.3, -1.0], 2.0).unwrap(), 1.0);
        assert!((rbf(&[0.0], &[1.0], 1.0).unwrap() - E_INV).abs() < 1e-15);
        assert!((rbf(&[0.0, 0.0], &[1.0, 1.0], 2.0).unwrap() - E_INV).abs() < 1e-15);
    }

    #[test]
    fn rbf_rejects_bad_scale_and_lengths() {
        assert!(matches!(rbf(&[0.0], &[1.0], 0.0), Err(KdrError::InvalidConfig(_))));
        assert!(matches!(rbf(&[0.0], &[1.0], -1.0), Err(KdrError::InvalidConfig(_))));
        assert!(matches!(rbf(&[0.0], &[1.0, 2.0], 1.0), Err(KdrError::Shape(_))));
    }

    #[test]
    fn identical_rows_give_all_ones() {
        let x = DMatrix::from_fn(5, 3, |_, j| j as f64 * 1.7 - 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = StiefelPoint::random(3, 2, &mut rng).unwrap();
        let k = gram_projected(&x, &b, 0.7).unwrap();
        assert!(k.entries().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn two_point_gram() {
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let b = StiefelPoint::leading_axes(1, 1).unwrap();
        let k = gram_projected(&x, &b, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, E_INV, E_INV, 1.0]);
        assert!(max_abs(&(k.entries() - expected)) < 1e-15);
    }

    #[test]
    fn gram_is_invariant_to_basis_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = normal_matrix(30, 5, &mut rng);
        let b = StiefelPoint::random(5, 3, &mut rng).unwrap();
        let q = retract(&normal_matrix(3, 3, &mut rng)).unwrap();
        let bq = StiefelPoint::new(b.matrix() * q.matrix()).unwrap();
        let k1 = gram_projected(&x, &b, 2.0).unwrap();
        let k2 = gram_projected(&x, &bq, 2.0).unwrap();
        assert!(max_abs(&(k1.entries() - k2.entries())) <= 1e-12);
    }

    #[test]
    fn gram_rejects_dimension_mismatch() {
        let x = DMatrix::zeros(4, 3);
        let b = StiefelPoint::leading_axes(4, 1).unwrap();
        assert!(matches!(gram_projected(&x, &b, 1.0), Err(KdrError::Shape(_))));
    }

    #[test]
    fn centering_examples() {
        let ones = GramMatrix::from_matrix(DMatrix::from_element(4, 4, 1.0), false).unwrap();
        assert!(max_abs(center(&ones).entries()) < 1e-15);

        let k = 0.3;
        let two = GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, k, k, 1.0]), false).unwrap();
        let h = (1.0 - k) / 2.0;
        let expected = DMatrix::from_row_slice(2, 2, &[h, -h, -h, h]);
        assert!(max_abs(&(center(&two).entries() - expected)) < 1e-15);
    }

    #[test]
    fn centering_matches_explicit_projector_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = normal_matrix(25, 3, &mut rng);
        let b = StiefelPoint::leading_axes(3, 2).unwrap();
        let k = gram_projected(&x, &b, 1.5).unwrap();
        let n = 25;
        let h = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let g = center(&k);
        assert!(max_abs(&(g.entries() - &h * k.entries() * &h)) < 1e-13);
        let gg = center(&g);
        assert!(max_abs(&(gg.entries() - g.entries())) < 1e-14);
        assert!(g.is_centered());
    }

    #[test]
    fn continuation_schedule_is_linear() {
        let c = Continuation::default();
        assert_eq!(c.scale_at(0, 100), 100.0);
        assert!((c.scale_at(99, 100) - 10.0).abs() < 1e-12);
        assert!((c.scale_at(33, 100) - (100.0 - 90.0 * 33.0 / 99.0)).abs() < 1e-12);
        assert_eq!(c.scale_at(0, 1), 10.0);
        assert!(Continuation::new(1.0, 10.0).is_err());
        assert!(Continuation::new(10.0, 0.0).is_err());
    }

    #[test]
    fn kernel_config_validation() {
        assert!(KernelConfig::new(0.0, 1.0, None).is_err());
        assert!(KernelConfig::new(1.0, -1.0, None).is_err());
        assert!(KernelConfig::new(1.0, 1.0, Some(Continuation { sigma_sq_start: 1.0, sigma_sq_end: 5.0 })).is_err());
        let k = KernelConfig::fixed(2.0).unwrap();
        assert_eq!(k.scale_x_at(17, 100), 2.0);
    }
}
