//! Steepest descent on the Stiefel manifold with Armijo backtracking.
//!
//! Each iteration projects the Euclidean gradient onto the tangent space,
//! normalises it, and tries steps `initial_step, initial_step * shrink, ...`
//! along the negative direction, retracting every trial point with QR. The
//! first trial meeting the sufficient-decrease condition
//! `f(trial) <= f(B) - c1 * step * |xi|_F` is accepted. When no trial passes
//! the iterate is kept and the fit is flagged as stalled.
//!
//! Under continuation the kernel scale changes between iterations, never
//! within a line search, so objective values are only comparable inside a
//! fixed-scale segment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KdrError, Result};
use crate::kernelgram::{response_gram, KernelConfig};
use crate::objective::{KdrObjective, RegCoeff};
use crate::stiefel::{retract, tangent_project, StiefelPoint};
use crate::synthdata::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    pub armijo_c1: f64,
    /// Length (Frobenius norm) of the first trial displacement.
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch { shrink: 0.5, armijo_c1: 1e-4, initial_step: 1.0, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    /// Number of descent iterations (accepted or stalled).
    pub iterations: usize,
    pub line_search: LineSearch,
    /// Seeds the random starting points used by restarts.
    pub seed: u64,
    /// Additional random starts beyond the leading-axes start.
    pub restarts: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig { iterations: 100, line_search: LineSearch::default(), seed: 0, restarts: 0 }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        if self.iterations == 0 {
            return Err(KdrError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(KdrError::InvalidConfig(format!("shrink must lie in (0, 1), got {}", ls.shrink)));
        }
        if !(ls.armijo_c1 > 0.0 && ls.armijo_c1 < 1.0) {
            return Err(KdrError::InvalidConfig(format!("armijo_c1 must lie in (0, 1), got {}", ls.armijo_c1)));
        }
        if !(ls.initial_step > 0.0 && ls.initial_step.is_finite()) {
            return Err(KdrError::InvalidConfig("initial_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub b_hat: StiefelPoint,
    /// Objective after each iteration, at that iteration's kernel scale.
    pub objective_trace: Vec<f64>,
    /// Kernel scale used at each iteration.
    pub sigma_sq_trace: Vec<f64>,
    /// Objective of `b_hat` at the final kernel scale.
    pub final_objective: f64,
    /// Set when some line search ran out of backtracks.
    pub converged_flag: bool,
    /// Largest `max |B^T B - I|` over all accepted iterates.
    pub max_orthonormality_error: f64,
    /// Which start produced `b_hat` (0 is the leading-axes start).
    pub start_index: usize,
}

impl FitResult {
    /// Whether the objective never increased between consecutive iterations
    /// run at the same kernel scale.
    pub fn is_monotone_per_segment(&self) -> bool {
        self.objective_trace
            .windows(2)
            .zip(self.sigma_sq_trace.windows(2))
            .all(|(f, s)| s[0] != s[1] || f[1] <= f[0])
    }
}

/// Fits a `d`-dimensional KDR subspace to `data` (expected to be
/// standardized already).
pub fn fit_kdr(
    data: &Dataset,
    d: usize,
    kcfg: &KernelConfig,
    eps: RegCoeff,
    ocfg: &OptimConfig,
) -> Result<FitResult> {
    let (n, m) = (data.n(), data.m());
    if n < 2 {
        return Err(KdrError::InvalidConfig("need at least two observations".into()));
    }
    if d == 0 || d >= m {
        return Err(KdrError::InvalidConfig(format!("dimension must satisfy 1 <= d < m = {m}, got {d}")));
    }
    ocfg.validate()?;
    let g_y = response_gram(&data.y, kcfg.scale_y)?;
    let objective = KdrObjective::new(&data.x, &g_y, eps)?;

    let mut starts = vec![StiefelPoint::leading_axes(m, d)?];
    let mut rng = ChaCha8Rng::seed_from_u64(ocfg.seed);
    for _ in 0..ocfg.restarts {
        starts.push(StiefelPoint::random(m, d, &mut rng)?);
    }

    let mut best: Option<FitResult> = None;
    for (idx, start) in starts.into_iter().enumerate() {
        let mut fit = descend(&objective, start, kcfg, ocfg)?;
        fit.start_index = idx;
        if best.as_ref().is_none_or(|b| fit.final_objective < b.final_objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Runs the descent from a given starting point.
pub fn descend(
    objective: &KdrObjective,
    start: StiefelPoint,
    kcfg: &KernelConfig,
    ocfg: &OptimConfig,
) -> Result<FitResult> {
    ocfg.validate()?;
    let total = ocfg.iterations;
    let ls = ocfg.line_search;
    let mut b = start;
    let mut objective_trace = Vec::with_capacity(total);
    let mut sigma_sq_trace = Vec::with_capacity(total);
    let mut iterates = Vec::with_capacity(total);
    let mut stalled = false;
    let mut max_orth = b.orthonormality_error();

    for t in 0..total {
        let c = kcfg.scale_x_at(t, total);
        let eval = objective.evaluate(&b, c)?;
        let f = eval.value;
        let grad = eval.gradient.expect("evaluate fills the gradient");
        let xi = tangent_project(&b, &grad)?;
        let slope = xi.norm();

        let mut next = None;
        if slope > 1e-14 * (1.0 + f.abs()) {
            let dir = xi / slope;
            let mut step = ls.initial_step;
            for _ in 0..=ls.max_backtracks {
                match retract(&(b.matrix() - &dir * step)) {
                    Ok(trial) => {
                        let ft = objective.value(&trial, c)?;
                        if ft <= f - ls.armijo_c1 * step * slope {
                            next = Some((trial, ft));
                            break;
                        }
                    }
                    Err(KdrError::DegenerateStep) => {}
                    Err(e) => return Err(e),
                }
                step *= ls.shrink;
            }
            if next.is_none() {
                stalled = true;
            }
        }

        let frozen = next.is_none();
        match next {
            Some((trial, ft)) => {
                max_orth = max_orth.max(trial.orthonormality_error());
                b = trial;
                objective_trace.push(ft);
            }
            None => objective_trace.push(f),
        }
        sigma_sq_trace.push(c);
        if kcfg.continuation.is_some() {
            iterates.push(b.clone());
        } else if frozen {
            // Fixed scale: every remaining iteration would repeat this one.
            objective_trace.resize(total, f);
            sigma_sq_trace.resize(total, c);
            break;
        }
    }

    // Without continuation every value is at the final scale and the trace is
    // non-increasing, so the last iterate is the best one.
    let (b_hat, final_objective) = if kcfg.continuation.is_some() {
        let c_final = kcfg.final_scale_x();
        let mut best: Option<(StiefelPoint, f64)> = None;
        let mut previous: Option<&StiefelPoint> = None;
        for it in &iterates {
            if previous == Some(it) {
                continue;
            }
            previous = Some(it);
            let v = objective.value(it, c_final)?;
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((it.clone(), v));
            }
        }
        best.expect("at least one iterate")
    } else {
        let last = *objective_trace.last().expect("iterations >= 1");
        (b, last)
    };

    Ok(FitResult {
        b_hat,
        objective_trace,
        sigma_sq_trace,
        final_objective,
        converged_flag: stalled,
        max_orthonormality_error: max_orth,
        start_index: 0,
    })
}
