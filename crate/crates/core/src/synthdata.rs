//! Synthetic benchmark regressions and covariate standardization.
//!
//! * (A) `Y = X1 / (0.5 + (X2 + 1.5)^2) + (1 + X2)^2 + sigma E`, `X ~ N(0, I_4)`
//! * (B) `Y = sin^2(pi X2 + 1) + sigma E`, `X` uniform on
//!   `[0,1]^4 \ {x : x_i <= 0.7 for all i}`
//! * (C) `Y = (X1 - a)^2 E / 2`, `X ~ N(0, I_10)`
//!
//! with `E ~ N(0, 1)` independent of `X`. Randomness comes from
//! `ChaCha8Rng` seeded with the spec's seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{KdrError, Result};
use crate::linalg::{column_means, column_sds};
use crate::stiefel::{retract, StiefelPoint};

/// Per-column affine map `x_std = (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Covariates, one observation per row.
    pub x: DMatrix<f64>,
    /// Responses, one observation per row.
    pub y: DMatrix<f64>,
    /// Set once `x` has been standardized; maps back to original coordinates.
    pub standardization: Option<Standardization>,
    /// Known central subspace, in original coordinates.
    pub true_b: Option<StiefelPoint>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(KdrError::Shape(format!("{} covariate rows but {} responses", x.nrows(), y.nrows())));
        }
        if x.nrows() < 2 {
            return Err(KdrError::InvalidConfig("need at least two observations".into()));
        }
        if x.ncols() == 0 || y.ncols() == 0 {
            return Err(KdrError::Shape("need at least one covariate and one response column".into()));
        }
        Ok(Dataset { x, y, standardization: None, true_b: None })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regression {
    A,
    B,
    C,
}

impl Regression {
    pub const ALL: [Regression; 3] = [Regression::A, Regression::B, Regression::C];

    pub fn covariate_dim(self) -> usize {
        match self {
            Regression::A | Regression::B => 4,
            Regression::C => 10,
        }
    }

    /// Axes spanning the central subspace.
    pub fn true_axes(self) -> &'static [usize] {
        match self {
            Regression::A => &[0, 1],
            Regression::B => &[1],
            Regression::C => &[0],
        }
    }

    pub fn true_dim(self) -> usize {
        self.true_axes().len()
    }

    pub fn default_n(self) -> usize {
        match self {
            Regression::A | Regression::B => 100,
            Regression::C => 500,
        }
    }

    /// Noise levels (A, B) or offsets `a` (C) of the standard benchmark grid.
    pub fn table_parameters(self) -> [f64; 3] {
        match self {
            Regression::A => [0.1, 0.4, 0.8],
            Regression::B => [0.1, 0.2, 0.3],
            Regression::C => [0.0, 0.5, 1.0],
        }
    }

    /// Kernel scale `c` used for KDR in the standard benchmark.
    pub fn table_kernel_scale(self) -> f64 {
        match self {
            Regression::A | Regression::C => 2.0,
            Regression::B => 0.5,
        }
    }

    /// Noise-free part of (A) and (B) at `x`; for (C) the conditional
    /// standard deviation `(x1 - a)^2 / 2`.
    pub fn signal(self, x: &[f64], param: f64) -> f64 {
        match self {
            Regression::A => x[0] / (0.5 + (x[1] + 1.5).powi(2)) + (1.0 + x[1]).powi(2),
            Regression::B => (std::f64::consts::PI * x[1] + 1.0).sin().powi(2),
            Regression::C => 0.5 * (x[0] - param).powi(2),
        }
    }
}

impl fmt::Display for Regression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regression::A => "A",
            Regression::B => "B",
            Regression::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Regression {
    type Err = KdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Regression::A),
            "B" => Ok(Regression::B),
            "C" => Ok(Regression::C),
            other => Err(KdrError::InvalidConfig(format!("unknown regression '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub regression: Regression,
    pub n: usize,
    /// `sigma` for (A) and (B), `a` for (C).
    pub noise_or_a: f64,
    pub seed: u64,
}

impl GenSpec {
    /// Spec with the regression's default sample size.
    pub fn new(regression: Regression, noise_or_a: f64, seed: u64) -> Self {
        GenSpec { regression, n: regression.default_n(), noise_or_a, seed }
    }
}

/// Draws from region (B); gives up after this many rejections in a row.
const MAX_REJECTIONS: usize = 10_000;

/// Rejection sampler for the uniform distribution on
/// `[0,1]^4 \ [0,0.7]^4`. Returns the point and the number of draws used.
pub fn sample_region_b<R: Rng + ?Sized>(rng: &mut R) -> Result<([f64; 4], usize)> {
    for draws in 1..=MAX_REJECTIONS {
        let p: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        if p.iter().any(|&v| v > 0.7) {
            return Ok((p, draws));
        }
    }
    Err(KdrError::Numeric("rejection sampler exhausted its retries".into()))
}

pub fn generate(spec: &GenSpec) -> Result<Dataset> {
    if spec.n < 2 {
        return Err(KdrError::InvalidConfig("need at least two observations".into()));
    }
    if !spec.noise_or_a.is_finite() {
        return Err(KdrError::InvalidConfig("noise parameter must be finite".into()));
    }
    let reg = spec.regression;
    let m = reg.covariate_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = DMatrix::zeros(spec.n, m);
    let mut y = DMatrix::zeros(spec.n, 1);
    let mut row = vec![0.0; m];
    for i in 0..spec.n {
        match reg {
            Regression::A | Regression::C => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            Regression::B => {
                let (p, _) = sample_region_b(&mut rng)?;
                row.copy_from_slice(&p);
            }
        }
        let e: f64 = rng.sample(StandardNormal);
        y[(i, 0)] = match reg {
            Regression::A | Regression::B => reg.signal(&row, 0.0) + spec.noise_or_a * e,
            Regression::C => reg.signal(&row, spec.noise_or_a) * e,
        };
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let mut data = Dataset::new(x, y)?;
    data.true_b = Some(StiefelPoint::axes(m, reg.true_axes())?);
    Ok(data)
}

/// Rescales every covariate column to mean zero and sample standard
/// deviation `target_sd` (`n - 1` denominator). Standardizing twice composes
/// the stored maps, so the record always refers to the original coordinates.
pub fn standardize(data: &Dataset, target_sd: f64) -> Result<Dataset> {
    if !(target_sd > 0.0 && target_sd.is_finite()) {
        return Err(KdrError::InvalidConfig(format!("target sd must be positive, got {target_sd}")));
    }
    let means = column_means(&data.x);
    let sds = column_sds(&data.x);
    for (j, &sd) in sds.iter().enumerate() {
        let spread = data.x.column(j).iter().map(|v| (v - means[j]).abs()).fold(0.0_f64, f64::max);
        if !(sd > 0.0) || spread <= 1e-14 * (1.0 + means[j].abs()) {
            return Err(KdrError::ConstantColumn { column: j });
        }
    }
    let scale: Vec<f64> = sds.iter().map(|sd| sd / target_sd).collect();
    let mut x = data.x.clone();
    for (j, mut col) in x.column_iter_mut().enumerate() {
        for v in col.iter_mut() {
            *v = (*v - means[j]) / scale[j];
        }
    }
    let record = match &data.standardization {
        None => Standardization { mean: means.iter().copied().collect(), scale },
        Some(prev) => Standardization {
            mean: (0..data.m()).map(|j| prev.mean[j] + means[j] * prev.scale[j]).collect(),
            scale: (0..data.m()).map(|j| prev.scale[j] * scale[j]).collect(),
        },
    };
    Ok(Dataset { x, y: data.y.clone(), standardization: Some(record), true_b: data.true_b.clone() })
}

/// Maps a subspace fitted on standardized covariates back to the original
/// covariate coordinates: `retract(D^-1 B)` with `D = diag(scale)`.
pub fn unstandardize_subspace(b_std: &StiefelPoint, standardization: &Standardization) -> Result<StiefelPoint> {
    let m = b_std.ambient_dim();
    if standardization.scale.len() != m {
        return Err(KdrError::Shape(format!(
            "standardization covers {} columns, subspace lives in R^{m}",
            standardization.scale.len()
        )));
    }
    let inv = DVector::from_iterator(m, standardization.scale.iter().map(|s| 1.0 / s));
    let mut b = b_std.matrix().clone();
    for mut col in b.column_iter_mut() {
        col.component_mul_assign(&inv);
    }
    retract(&b)
}
