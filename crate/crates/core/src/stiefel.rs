//! Points of the Stiefel manifold `{B in R^{m x d} : B^T B = I_d}` and the
//! first-order machinery used by the descent: tangent projection under the
//! Euclidean metric and a sign-fixed QR retraction.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KdrError, Result};
use crate::linalg::orthonormality_error;

/// Tolerance of the orthonormality invariant, `max |B^T B - I|`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// An `m x d` matrix with orthonormal columns.
///
/// It represents the subspace spanned by its columns; `B` and `BQ` for
/// orthogonal `Q` describe the same subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint(DMatrix<f64>);

impl StiefelPoint {
    /// Wraps `b`, checking that its columns are orthonormal.
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if b.ncols() == 0 || b.ncols() > b.nrows() {
            return Err(KdrError::Shape(format!(
                "Stiefel point needs 1 <= d <= m, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let err = orthonormality_error(&b);
        if !(err <= ORTHONORMAL_TOL) {
            return Err(KdrError::Numeric(format!(
                "columns are not orthonormal (max |B^T B - I| = {err:e})"
            )));
        }
        Ok(StiefelPoint(b))
    }

    /// The first `d` columns of the `m x m` identity.
    pub fn leading_axes(m: usize, d: usize) -> Result<Self> {
        StiefelPoint::new(DMatrix::identity(m, d))
    }

    /// Spans the given coordinate axes, in order.
    pub fn axes(m: usize, indices: &[usize]) -> Result<Self> {
        let mut b = DMatrix::zeros(m, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            if i >= m {
                return Err(KdrError::Shape(format!("axis {i} out of range for m = {m}")));
            }
            b[(i, col)] = 1.0;
        }
        StiefelPoint::new(b)
    }

    /// A Gaussian matrix retracted onto the manifold; the resulting subspace
    /// is uniformly distributed on the Grassmannian.
    pub fn random<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Result<Self> {
        loop {
            let g = DMatrix::from_fn(m, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            match retract(&g) {
                Err(KdrError::DegenerateStep) => continue,
                other => return other,
            }
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Ambient dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    /// Subspace dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }
}

/// Projects an ambient direction onto the tangent space at `b`:
/// `G - B sym(B^T G)`.
pub fn tangent_project(b: &StiefelPoint, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let bm = b.matrix();
    if g.shape() != bm.shape() {
        return Err(KdrError::Shape(format!(
            "direction is {}x{}, point is {}x{}",
            g.nrows(),
            g.ncols(),
            bm.nrows(),
            bm.ncols()
        )));
    }
    let btg = bm.transpose() * g;
    let sym = (&btg + btg.transpose()) * 0.5;
    Ok(g - bm * sym)
}

/// Q factor of the thin QR decomposition of `m`, with column signs chosen so
/// that `R` has a positive diagonal.
pub fn retract(m: &DMatrix<f64>) -> Result<StiefelPoint> {
    let (rows, cols) = m.shape();
    if cols == 0 || cols > rows {
        return Err(KdrError::Shape(format!("cannot retract a {rows}x{cols} matrix")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(KdrError::Numeric("non-finite entry in retraction input".into()));
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let scale = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    for i in 0..cols {
        let rii = r[(i, i)];
        if !(rii.abs() > 1e-12 * scale) || scale == 0.0 {
            return Err(KdrError::DegenerateStep);
        }
        if rii < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    StiefelPoint::new(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(m: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(m, d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn projecting_the_point_itself_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = StiefelPoint::random(6, 3, &mut rng).unwrap();
        let xi = tangent_project(&b, b.matrix()).unwrap();
        assert!(max_abs(&xi) < 1e-14);
    }

    #[test]
    fn already_tangent_direction_is_unchanged() {
        let b = StiefelPoint::axes(4, &[0, 1]).unwrap();
        let g = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.5, -2.0, 0.3, 4.0]);
        assert_eq!(tangent_project(&b, &g).unwrap(), g);
    }

    #[test]
    fn projection_satisfies_skew_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let b = StiefelPoint::random(7, 3, &mut rng).unwrap();
            let g = gaussian(7, 3, &mut rng);
            let xi = tangent_project(&b, &g).unwrap();
            let s = b.matrix().transpose() * &xi + xi.transpose() * b.matrix();
            assert!(max_abs(&s) <= 1e-12);
        }
    }

    #[test]
    fn tangent_project_rejects_shape_mismatch() {
        let b = StiefelPoint::leading_axes(4, 2).unwrap();
        assert!(matches!(
            tangent_project(&b, &DMatrix::zeros(4, 3)),
            Err(KdrError::Shape(_))
        ));
    }

    #[test]
    fn retracting_orthonormal_matrix_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = StiefelPoint::random(5, 2, &mut rng).unwrap();
        let again = retract(b.matrix()).unwrap();
        assert!(max_abs(&(again.matrix() - b.matrix())) < 1e-12);
        let scaled = retract(&(b.matrix() * 2.0)).unwrap();
        assert!(max_abs(&(scaled.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn retraction_output_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let m = gaussian(5, 2, &mut rng);
            let q = retract(&m).unwrap();
            assert!(q.orthonormality_error() <= 1e-12);
        }
    }

    #[test]
    fn retraction_rejects_rank_deficiency() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(retract(&m), Err(KdrError::DegenerateStep));
        assert_eq!(retract(&DMatrix::zeros(3, 1)), Err(KdrError::DegenerateStep));
    }

    #[test]
    fn constructor_rejects_non_orthonormal() {
        assert!(StiefelPoint::new(DMatrix::from_element(3, 1, 1.0)).is_err());
        assert!(StiefelPoint::new(DMatrix::identity(2, 3)).is_err());
    }
}
