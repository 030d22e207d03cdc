//! Inverse-regression baselines: SIR, SAVE and pHd.
//!
//! All three whiten the covariates, `z = Sigma^{-1/2} (x - mean)`, build a
//! symmetric `m x m` candidate matrix, keep its leading eigenvectors and map
//! them back with `Sigma^{-1/2}` before re-orthonormalizing.
//!
//! * SIR: `sum_h p_h mu_h mu_h^T`, `mu_h` the slice mean of `z`.
//! * SAVE: `sum_h p_h (I - V_h)^2`, `V_h` the within-slice covariance of `z`.
//! * pHd: `(1/n) sum_i (y_i - ybar) (z_i z_i^T - I)`, ranked by `|eigenvalue|`.

use nalgebra::{DMatrix, DVector};

use crate::error::{KdrError, Result};
use crate::linalg::{sorted_symmetric_eigen, whiten};
use crate::stiefel::{retract, StiefelPoint};
use crate::synthdata::Dataset;

/// Eigenvalues below this fraction of the largest magnitude count as zero.
const INFORMATIVE_TOL: f64 = 1e-8;
/// Eigenvalues below this multiple of the candidate's natural scale are
/// roundoff.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceStrategy {
    /// Contiguous groups of the sorted responses, sizes differing by at most one.
    EqualCount,
    /// One slice per distinct response value.
    DistinctLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceSpec {
    pub n_slices: usize,
    pub strategy: SliceStrategy,
}

impl SliceSpec {
    pub fn equal_count(n_slices: usize) -> Self {
        SliceSpec { n_slices, strategy: SliceStrategy::EqualCount }
    }

    pub fn labels() -> Self {
        SliceSpec { n_slices: 0, strategy: SliceStrategy::DistinctLabels }
    }

    /// Label slicing when the response takes at most `n_slices` distinct
    /// values, equal-count slicing otherwise.
    pub fn auto(n_slices: usize, y: &[f64]) -> Self {
        let mut distinct: Vec<f64> = y.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() <= n_slices {
            SliceSpec::labels()
        } else {
            SliceSpec::equal_count(n_slices)
        }
    }
}

/// Result of a baseline fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub basis: StiefelPoint,
    /// Candidate-matrix eigenvalues, in the order used for selection.
    pub eigenvalues: Vec<f64>,
    /// Fewer than `d` informative eigenvalues were found; trailing directions
    /// are arbitrary.
    pub rank_warning: bool,
}

fn scalar_response(data: &Dataset, method: &str) -> Result<Vec<f64>> {
    if data.q() != 1 {
        return Err(KdrError::UnsupportedResponse(format!(
            "{method} needs a one-dimensional response, got {} columns",
            data.q()
        )));
    }
    Ok(data.y.column(0).iter().copied().collect())
}

fn check_dims(data: &Dataset, d: usize) -> Result<()> {
    if d == 0 || d > data.m() {
        return Err(KdrError::InvalidConfig(format!("dimension must satisfy 1 <= d <= m = {}, got {d}", data.m())));
    }
    if data.n() <= data.m() {
        return Err(KdrError::InvalidConfig(format!("need n > m, got n = {}, m = {}", data.n(), data.m())));
    }
    Ok(())
}

/// Partitions observation indices into slices.
pub fn make_slices(y: &[f64], spec: SliceSpec) -> Result<Vec<Vec<usize>>> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| y[i].total_cmp(&y[j]).then(i.cmp(&j)));
    match spec.strategy {
        SliceStrategy::EqualCount => {
            let h = spec.n_slices;
            if h < 2 || h > n {
                return Err(KdrError::InvalidConfig(format!("need 2 <= slices <= n = {n}, got {h}")));
            }
            let (base, extra) = (n / h, n % h);
            let mut slices = Vec::with_capacity(h);
            let mut start = 0;
            for s in 0..h {
                let len = base + usize::from(s < extra);
                slices.push(order[start..start + len].to_vec());
                start += len;
            }
            Ok(slices)
        }
        SliceStrategy::DistinctLabels => {
            let mut groups: Vec<Vec<usize>> = Vec::new();
            for &i in &order {
                match groups.last_mut() {
                    Some(g) if y[g[0]] == y[i] => g.push(i),
                    _ => groups.push(vec![i]),
                }
            }
            Ok(groups)
        }
    }
}

fn slice_stats(z: &DMatrix<f64>, slice: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let m = z.ncols();
    let nh = slice.len() as f64;
    let mut mean = DVector::zeros(m);
    for &i in slice {
        mean += z.row(i).transpose();
    }
    mean /= nh;
    let mut cov = DMatrix::zeros(m, m);
    for &i in slice {
        let dev = z.row(i).transpose() - &mean;
        cov += &dev * dev.transpose();
    }
    cov /= nh;
    (mean, cov)
}

fn finish(
    candidate: &DMatrix<f64>,
    inv_sqrt: &DMatrix<f64>,
    d: usize,
    by_magnitude: bool,
    rank_bound: Option<usize>,
    reference: f64,
) -> Result<BaselineFit> {
    let (vals, vecs) = if by_magnitude {
        sorted_symmetric_eigen(candidate, f64::abs)
    } else {
        sorted_symmetric_eigen(candidate, |l| l)
    };
    let top = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = (INFORMATIVE_TOL * top).max(ROUNDOFF_FLOOR * reference);
    let informative = vals.iter().filter(|v| v.abs() > floor).count();
    let informative = rank_bound.map_or(informative, |r| informative.min(r));
    let directions = inv_sqrt * vecs.columns(0, d);
    Ok(BaselineFit { basis: retract(&directions)?, eigenvalues: vals, rank_warning: informative < d })
}

/// Sliced inverse regression.
pub fn fit_sir(data: &Dataset, d: usize, slices: SliceSpec) -> Result<BaselineFit> {
    check_dims(data, d)?;
    let y = scalar_response(data, "SIR")?;
    let (z, inv_sqrt) = whiten(&data.x)?;
    let parts = make_slices(&y, slices)?;
    let n = data.n() as f64;
    let m = data.m();
    let mut candidate = DMatrix::zeros(m, m);
    for part in &parts {
        let (mean, _) = slice_stats(&z, part);
        candidate += &mean * mean.transpose() * (part.len() as f64 / n);
    }
    // Slice means of whitened data sum to zero with weights p_h: rank <= H - 1.
    finish(&candidate, &inv_sqrt, d, false, Some(parts.len() - 1), 1.0)
}

/// Sliced average variance estimation.
pub fn fit_save(data: &Dataset, d: usize, slices: SliceSpec) -> Result<BaselineFit> {
    check_dims(data, d)?;
    let y = scalar_response(data, "SAVE")?;
    let (z, inv_sqrt) = whiten(&data.x)?;
    let parts = make_slices(&y, slices)?;
    let n = data.n() as f64;
    let m = data.m();
    let identity = DMatrix::<f64>::identity(m, m);
    let mut candidate = DMatrix::zeros(m, m);
    for part in &parts {
        let (_, cov) = slice_stats(&z, part);
        let dev = &identity - cov;
        candidate += &dev * &dev * (part.len() as f64 / n);
    }
    finish(&candidate, &inv_sqrt, d, false, None, 1.0)
}

/// Principal Hessian directions (response-based).
pub fn fit_phd(data: &Dataset, d: usize) -> Result<BaselineFit> {
    check_dims(data, d)?;
    let y = scalar_response(data, "pHd")?;
    let (z, inv_sqrt) = whiten(&data.x)?;
    let n = data.n();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let m = data.m();
    let mut candidate = DMatrix::zeros(m, m);
    let mut weight_sum = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let w = yi - ybar;
        weight_sum += w;
        let zi = z.row(i).transpose();
        candidate += &zi * zi.transpose() * w;
    }
    for j in 0..m {
        candidate[(j, j)] -= weight_sum;
    }
    candidate /= n as f64;
    let y_scale = y.iter().map(|v| (v - ybar).abs()).fold(0.0_f64, f64::max);
    finish(&candidate, &inv_sqrt, d, true, None, y_scale)
}
