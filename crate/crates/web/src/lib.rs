//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exported: a single KDR fit on a synthetic
//! regression, the contrast along a rotation away from the true subspace,
//! and a small Monte Carlo comparison of KDR, SIR, SAVE and pHd. Each has a
//! plain Rust counterpart (`run_fit`, `landscape`, `compare`) so the logic
//! is testable off the browser.

use kdr_core::evalbench::{projection_distance, run_benchmark, BenchConfig, Method};
use kdr_core::kernelgram::{response_gram, KernelConfig};
use kdr_core::objective::KdrObjective;
use kdr_core::optim::{fit_kdr, OptimConfig};
use kdr_core::stiefel::StiefelPoint;
use kdr_core::synthdata::{generate, standardize, unstandardize_subspace, GenSpec, Regression};
use kdr_core::{DMatrix, RegCoeff};
use wasm_bindgen::prelude::*;

/// Covariate scale used for every demo fit.
const TARGET_SD: f64 = 1.0;

/// Outcome of one demo fit, in the generated coordinates.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct FitView {
    projected: DMatrix<f64>,
    response: Vec<f64>,
    trace: Vec<f64>,
    basis: DMatrix<f64>,
    distance: f64,
}

#[wasm_bindgen]
impl FitView {
    /// Number of fitted directions.
    #[wasm_bindgen(getter)]
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Projection of the covariates on fitted direction `k`.
    pub fn projected(&self, k: usize) -> Vec<f64> {
        self.projected.column(k).iter().copied().collect()
    }

    #[wasm_bindgen(getter)]
    pub fn response(&self) -> Vec<f64> {
        self.response.clone()
    }

    /// Objective value after each iteration.
    #[wasm_bindgen(getter)]
    pub fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    /// Fitted basis, row-major `m x d`.
    #[wasm_bindgen(getter)]
    pub fn basis(&self) -> Vec<f64> {
        self.basis.transpose().iter().copied().collect()
    }

    /// Projection distance to the true subspace.
    #[wasm_bindgen(getter)]
    pub fn distance(&self) -> f64 {
        self.distance
    }
}

fn regression(name: &str) -> Result<Regression, String> {
    name.parse().map_err(|_| format!("unknown regression '{name}'"))
}

/// Generates regression `name` and fits a subspace of the true dimension.
pub fn run_fit(name: &str, param: f64, n: usize, seed: u64, iters: usize) -> Result<FitView, String> {
    let reg = regression(name)?;
    let data = generate(&GenSpec { regression: reg, n, noise_or_a: param, seed }).map_err(|e| e.to_string())?;
    let std_data = standardize(&data, TARGET_SD).map_err(|e| e.to_string())?;
    let kcfg = KernelConfig::fixed(reg.table_kernel_scale()).map_err(|e| e.to_string())?;
    let ocfg = OptimConfig { iterations: iters, seed, ..Default::default() };
    let fit = fit_kdr(&std_data, reg.true_dim(), &kcfg, RegCoeff::default(), &ocfg).map_err(|e| e.to_string())?;
    let record = std_data.standardization.as_ref().expect("standardize records its map");
    let basis = unstandardize_subspace(&fit.b_hat, record).map_err(|e| e.to_string())?;
    let truth = data.true_b.as_ref().expect("synthetic data carries its subspace");
    let distance = projection_distance(truth, &basis).map_err(|e| e.to_string())?;
    Ok(FitView {
        projected: &data.x * basis.matrix(),
        response: data.y.column(0).iter().copied().collect(),
        trace: fit.objective_trace,
        basis: basis.into_matrix(),
        distance,
    })
}

/// Contrast at `B(t) = cos t B0 + sin t B1` for `steps` angles spanning
/// `[0, pi/2]`, where `B0` spans the true subspace and `B1` spans as many
/// other coordinate axes. Returns `[angle, value]` pairs, flattened.
pub fn landscape(name: &str, param: f64, n: usize, seed: u64, steps: usize) -> Result<Vec<f64>, String> {
    let reg = regression(name)?;
    if steps < 2 {
        return Err("need at least two angles".into());
    }
    let data = generate(&GenSpec { regression: reg, n, noise_or_a: param, seed }).map_err(|e| e.to_string())?;
    let data = standardize(&data, TARGET_SD).map_err(|e| e.to_string())?;
    let c = reg.table_kernel_scale();
    let g_y = response_gram(&data.y, c).map_err(|e| e.to_string())?;
    let objective = KdrObjective::new(&data.x, &g_y, RegCoeff::default()).map_err(|e| e.to_string())?;

    let m = reg.covariate_dim();
    let truth = reg.true_axes();
    let others: Vec<usize> = (0..m).filter(|i| !truth.contains(i)).take(truth.len()).collect();
    let b0 = StiefelPoint::axes(m, &truth[..others.len()]).map_err(|e| e.to_string())?;
    let b1 = StiefelPoint::axes(m, &others).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * steps);
    for s in 0..steps {
        let t = std::f64::consts::FRAC_PI_2 * s as f64 / (steps - 1) as f64;
        let mut b = b0.matrix() * t.cos() + b1.matrix() * t.sin();
        if others.len() < truth.len() {
            b = DMatrix::from_fn(m, truth.len(), |i, k| if k < others.len() { b[(i, k)] } else { f64::from(i == truth[k]) });
        }
        let point = StiefelPoint::new(b).map_err(|e| e.to_string())?;
        out.push(t);
        out.push(objective.value(&point, c).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Mean projection distance of KDR, SIR, SAVE and pHd (in that order) over
/// `reps` replications.
pub fn compare(name: &str, param: f64, reps: usize, seed: u64, iters: usize) -> Result<Vec<f64>, String> {
    let reg = regression(name)?;
    let cfg = BenchConfig {
        base_seed: seed,
        optim: OptimConfig { iterations: iters, ..Default::default() },
        ..Default::default()
    };
    [Method::Kdr, Method::Sir, Method::Save, Method::Phd]
        .iter()
        .map(|&method| run_benchmark(reg, param, method, reps, &cfg).map(|r| r.mean).map_err(|e| e.to_string()))
        .collect()
}

#[wasm_bindgen(js_name = fitDemo)]
pub fn fit_demo(name: &str, param: f64, n: usize, seed: u64, iters: usize) -> Result<FitView, JsError> {
    run_fit(name, param, n, seed, iters).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = contrastLandscape)]
pub fn contrast_landscape(name: &str, param: f64, n: usize, seed: u64, steps: usize) -> Result<Vec<f64>, JsError> {
    landscape(name, param, n, seed, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareMethods)]
pub fn compare_methods(name: &str, param: f64, reps: usize, seed: u64, iters: usize) -> Result<Vec<f64>, JsError> {
    compare(name, param, reps, seed, iters).map_err(|e| JsError::new(&e))
}
