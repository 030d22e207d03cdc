//! The KDR contrast `Tr[G_Y (G_X^B + n eps I)^-1]` and its gradient in `B`.
//!
//! With `M = G_X^B + n eps I`, `K` the uncentered covariate Gram matrix and
//! `A = H M^-1 G_Y M^-1 H`, the Euclidean gradient is
//!
//! ```text
//! d/dB = (2/c) sum_ij A_ij K_ij (x_i - x_j)(x_i - x_j)^T B
//!      = (4/c) X^T (D - W) X B,     W = A o K,  D = diag(W 1)
//! ```
//!
//! which costs `O(n^2 (d + r) + n m d)` once the Cholesky factor of `M` is
//! available (`r` is the numerical rank of `G_Y`).
//!
//! `G_Y` is fixed for a whole fit, so [`KdrObjective`] factors it once as
//! `G_Y = R R^T` from its eigendecomposition. The value is then
//! `|L^-1 R|_F^2` with `M = L L^T`.

use nalgebra::DMatrix;

use crate::error::{KdrError, Result};
use crate::kernelgram::{center, center_matrix, gram_projected, GramMatrix};
use crate::linalg::sorted_symmetric_eigen;
use crate::stiefel::StiefelPoint;

/// Eigenvalues of `G_Y` below this fraction of the largest are dropped from
/// its factor.
const RESPONSE_RANK_TOL: f64 = 1e-13;

/// Regularization coefficient `eps > 0` of the operator inverse.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RegCoeff(f64);

impl RegCoeff {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(RegCoeff(epsilon))
        } else {
            Err(KdrError::InvalidConfig(format!("epsilon must be positive, got {epsilon}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for RegCoeff {
    fn default() -> Self {
        RegCoeff(0.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: Option<DMatrix<f64>>,
}

/// The contrast for one data set, with the response Gram matrix factored.
#[derive(Debug, Clone)]
pub struct KdrObjective {
    x: DMatrix<f64>,
    response_factor: DMatrix<f64>,
    eps: RegCoeff,
}

struct Factored {
    kernel: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// `L^-1 R`
    half_solved: DMatrix<f64>,
}

impl KdrObjective {
    pub fn new(x: &DMatrix<f64>, g_y: &GramMatrix, eps: RegCoeff) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(KdrError::InvalidConfig("need at least two observations".into()));
        }
        if g_y.n() != n {
            return Err(KdrError::Shape(format!("data has {n} rows, response Gram is {}x{}", g_y.n(), g_y.n())));
        }
        if !g_y.is_centered() {
            return Err(KdrError::InvalidConfig("response Gram matrix must be centered".into()));
        }
        Ok(KdrObjective { x: x.clone(), response_factor: factor_psd(g_y.entries()), eps })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn epsilon(&self) -> RegCoeff {
        self.eps
    }

    /// Numerical rank kept in the factor of `G_Y`.
    pub fn response_rank(&self) -> usize {
        self.response_factor.ncols()
    }

    fn factor(&self, b: &StiefelPoint, c: f64) -> Result<Factored> {
        let n = self.n();
        let kernel = gram_projected(&self.x, b, c)?.into_entries();
        let mut m = center_matrix(&kernel);
        let ridge = n as f64 * self.eps.value();
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| KdrError::Numeric("regularized Gram matrix is not positive definite".into()))?;
        let half_solved = chol
            .l_dirty()
            .solve_lower_triangular(&self.response_factor)
            .ok_or_else(|| KdrError::Numeric("triangular solve failed".into()))?;
        Ok(Factored { kernel, chol, half_solved })
    }

    /// Contrast value only.
    pub fn value(&self, b: &StiefelPoint, c: f64) -> Result<f64> {
        Ok(self.factor(b, c)?.half_solved.norm_squared())
    }

    /// Contrast value and Euclidean gradient.
    pub fn evaluate(&self, b: &StiefelPoint, c: f64) -> Result<ObjectiveEval> {
        let f = self.factor(b, c)?;
        let value = f.half_solved.norm_squared();
        let (n, m, d) = (self.n(), self.x.ncols(), b.dim());
        if self.response_rank() == 0 {
            return Ok(ObjectiveEval { value, gradient: Some(DMatrix::zeros(m, d)) });
        }
        // U = H M^-1 R, so A = U U^T.
        let mut u = f
            .chol
            .l_dirty()
            .tr_solve_lower_triangular(&f.half_solved)
            .ok_or_else(|| KdrError::Numeric("triangular solve failed".into()))?;
        crate::linalg::center_columns(&mut u);
        let mut w = &u * u.transpose();
        w.component_mul_assign(&f.kernel);
        let z = &self.x * b.matrix();
        let mut lz = -(&w * &z);
        for i in 0..n {
            let row_sum: f64 = w.row(i).sum();
            for k in 0..d {
                lz[(i, k)] += row_sum * z[(i, k)];
            }
        }
        let gradient = self.x.transpose() * lz * (4.0 / c);
        Ok(ObjectiveEval { value, gradient: Some(gradient) })
    }
}

/// `R` with `R R^T = G` from the eigendecomposition of a PSD matrix.
fn factor_psd(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let (vals, vecs) = sorted_symmetric_eigen(g, |l| l);
    let top = vals.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return DMatrix::zeros(n, 0);
    }
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > RESPONSE_RANK_TOL * top).collect();
    DMatrix::from_fn(n, kept.len(), |r, c| vecs[(r, kept[c])] * vals[kept[c]].sqrt())
}

/// `Tr[G_Y (G_X^B + n eps I)^-1]` with `G_X^B` the centered projected Gram
/// matrix of `x` at scale `c`.
pub fn contrast(
    x: &DMatrix<f64>,
    g_y: &GramMatrix,
    b: &StiefelPoint,
    c: f64,
    eps: RegCoeff,
) -> Result<ObjectiveEval> {
    let value = KdrObjective::new(x, g_y, eps)?.value(b, c)?;
    Ok(ObjectiveEval { value, gradient: None })
}

/// Euclidean gradient of [`contrast`] with respect to `B`.
pub fn gradient(
    x: &DMatrix<f64>,
    g_y: &GramMatrix,
    b: &StiefelPoint,
    c: f64,
    eps: RegCoeff,
) -> Result<DMatrix<f64>> {
    let eval = KdrObjective::new(x, g_y, eps)?.evaluate(b, c)?;
    Ok(eval.gradient.expect("evaluate always fills the gradient"))
}

/// `(1/n) Tr[G_Y - G_X^B (G_X^B + n eps I)^-1 G_Y]`, the trace of the
/// empirical conditional covariance operator. Equals `eps` times
/// [`contrast`]; computed through a full solve against `G_Y` so it can be
/// used as an independent check.
pub fn contrast_dual_form(
    x: &DMatrix<f64>,
    g_y: &GramMatrix,
    b: &StiefelPoint,
    c: f64,
    eps: RegCoeff,
) -> Result<f64> {
    let n = x.nrows();
    if g_y.n() != n {
        return Err(KdrError::Shape(format!("data has {n} rows, response Gram is {}x{}", g_y.n(), g_y.n())));
    }
    let gx = center(&gram_projected(x, b, c)?).into_entries();
    let mut m = gx.clone();
    for i in 0..n {
        m[(i, i)] += n as f64 * eps.value();
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| KdrError::Numeric("regularized Gram matrix is not positive definite".into()))?;
    let solved = chol.solve(g_y.entries());
    let explained = (gx * solved).trace();
    Ok((g_y.entries().trace() - explained) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelgram::response_gram;
    use crate::linalg::max_abs;
    use crate::stiefel::retract;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn instance(seed: u64, n: usize, m: usize, d: usize) -> (DMatrix<f64>, GramMatrix, StiefelPoint) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_matrix(n, m, &mut rng);
        let y = DMatrix::from_fn(n, 1, |i, _| x[(i, 0)].sin() + 0.3 * x[(i, 1)] * x[(i, 1)]);
        let g_y = response_gram(&y, 1.0).unwrap();
        let b = StiefelPoint::random(m, d, &mut rng).unwrap();
        (x, g_y, b)
    }

    fn two_point_gram(scale: f64) -> GramMatrix {
        GramMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[scale, -scale, -scale, scale]), true).unwrap()
    }

    #[test]
    fn zero_response_gram_gives_zero_value_and_gradient() {
        let (x, _, b) = instance(1, 12, 3, 2);
        let zero = GramMatrix::from_matrix(DMatrix::zeros(12, 12), true).unwrap();
        let eps = RegCoeff::default();
        assert_eq!(contrast(&x, &zero, &b, 2.0, eps).unwrap().value, 0.0);
        assert_eq!(contrast_dual_form(&x, &zero, &b, 2.0, eps).unwrap(), 0.0);
        assert_eq!(max_abs(&gradient(&x, &zero, &b, 2.0, eps).unwrap()), 0.0);
    }

    #[test]
    fn two_point_closed_form() {
        // Points 0 and 1 on a line, c = 1: G_X = h [[1,-1],[-1,1]] with h = (1 - e^-1)/2.
        let x = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let b = StiefelPoint::leading_axes(1, 1).unwrap();
        let h = (1.0 - (-1.0f64).exp()) / 2.0;
        let g = 0.7;
        let eps = RegCoeff::new(0.1).unwrap();
        let value = contrast(&x, &two_point_gram(g), &b, 1.0, eps).unwrap().value;
        let expected = 2.0 * g / (2.0 * h + 2.0 * 0.1);
        assert!((value - expected).abs() < 1e-14);
        let dual = contrast_dual_form(&x, &two_point_gram(g), &b, 1.0, eps).unwrap();
        assert!((dual - 0.1 * expected).abs() < 1e-14);
    }

    #[test]
    fn value_is_invariant_under_right_rotation() {
        let (x, g_y, b) = instance(2, 30, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let q = retract(&normal_matrix(2, 2, &mut rng)).unwrap();
        let bq = StiefelPoint::new(b.matrix() * q.matrix()).unwrap();
        let eps = RegCoeff::default();
        let v1 = contrast(&x, &g_y, &b, 2.0, eps).unwrap().value;
        let v2 = contrast(&x, &g_y, &bq, 2.0, eps).unwrap().value;
        assert!((v1 - v2).abs() <= 1e-10 * (1.0 + v1));
    }

    #[test]
    fn value_decreases_with_epsilon() {
        let (x, g_y, b) = instance(3, 40, 4, 2);
        let vals: Vec<f64> = [0.05, 0.1, 0.2]
            .iter()
            .map(|&e| contrast(&x, &g_y, &b, 2.0, RegCoeff::new(e).unwrap()).unwrap().value)
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
    }

    #[test]
    fn gradient_vanishes_for_identical_rows() {
        let x = DMatrix::from_fn(8, 3, |_, j| j as f64);
        let y = DMatrix::from_fn(8, 1, |i, _| i as f64);
        let g_y = response_gram(&y, 1.0).unwrap();
        let b = StiefelPoint::leading_axes(3, 2).unwrap();
        let g = gradient(&x, &g_y, &b, 1.0, RegCoeff::default()).unwrap();
        assert!(max_abs(&g) < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, g_y, b) = instance(4, 20, 4, 2);
        let eps = RegCoeff::default();
        let obj = KdrObjective::new(&x, &g_y, eps).unwrap();
        let analytic = obj.evaluate(&b, 2.0).unwrap().gradient.unwrap();
        let h = 1e-5;
        for i in 0..4 {
            for k in 0..2 {
                let mut plus = b.matrix().clone();
                plus[(i, k)] += h;
                let mut minus = b.matrix().clone();
                minus[(i, k)] -= h;
                let fd = (raw_value(&x, &g_y, &plus, 2.0) - raw_value(&x, &g_y, &minus, 2.0)) / (2.0 * h);
                assert!((fd - analytic[(i, k)]).abs() <= 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", analytic[(i, k)]);
            }
        }
    }

    // Contrast at an arbitrary (non-orthonormal) B, by direct inversion.
    fn raw_value(x: &DMatrix<f64>, g_y: &GramMatrix, b: &DMatrix<f64>, c: f64) -> f64 {
        let n = x.nrows();
        let z = x * b;
        let k = DMatrix::from_fn(n, n, |i, j| (-(z.row(i) - z.row(j)).norm_squared() / c).exp());
        let mut m = center_matrix(&k);
        for i in 0..n {
            m[(i, i)] += n as f64 * 0.1;
        }
        (g_y.entries() * m.try_inverse().unwrap()).trace()
    }

    #[test]
    fn rejects_uncentered_or_mismatched_response() {
        let (x, g_y, _) = instance(5, 10, 3, 1);
        let raw = GramMatrix::from_matrix(DMatrix::identity(10, 10), false).unwrap();
        assert!(KdrObjective::new(&x, &raw, RegCoeff::default()).is_err());
        let small = GramMatrix::from_matrix(DMatrix::zeros(9, 9), true).unwrap();
        assert!(matches!(KdrObjective::new(&x, &small, RegCoeff::default()), Err(KdrError::Shape(_))));
        assert!(KdrObjective::new(&x, &g_y, RegCoeff::default()).is_ok());
        assert!(RegCoeff::new(0.0).is_err());
    }
}
