//! Monte Carlo checks of the generators, estimators and descent.

use kdr_core::baselines::{fit_save, fit_sir, SliceSpec};
use kdr_core::evalbench::{probe_trials, projection_distance, summarize};
use kdr_core::kernelgram::{response_gram, KernelConfig};
use kdr_core::objective::{KdrObjective, RegCoeff};
use kdr_core::optim::{descend, fit_kdr, OptimConfig};
use kdr_core::stiefel::{retract, StiefelPoint};
use kdr_core::synthdata::{generate, sample_region_b, standardize, unstandardize_subspace, Dataset, GenSpec, Regression};
use kdr_core::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let mut xc = x.clone();
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    xc.transpose() * &xc / (n - 1.0)
}

#[test]
fn gaussian_designs_have_identity_covariance() {
    for reg in [Regression::A, Regression::C] {
        let data = generate(&GenSpec { regression: reg, n: 10_000, noise_or_a: 0.5, seed: 12 }).unwrap();
        let cov = covariance(&data.x);
        let err = (cov - DMatrix::identity(reg.covariate_dim(), reg.covariate_dim())).abs().max();
        assert!(err <= 0.1, "{reg}: {err}");
    }
}

#[test]
fn region_b_acceptance_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut draws = 0;
    let accepted = 100_000;
    for _ in 0..accepted {
        draws += sample_region_b(&mut rng).unwrap().1;
    }
    let rate = accepted as f64 / draws as f64;
    let expected = 1.0 - 0.7f64.powi(4);
    assert!((rate - expected).abs() <= 0.02 * expected, "rate {rate}");
}

#[test]
fn regression_c_response_has_zero_mean() {
    let data = generate(&GenSpec { regression: Regression::C, n: 100_000, noise_or_a: 0.0, seed: 5 }).unwrap();
    let y: Vec<f64> = data.y.iter().copied().collect();
    let (mean, sd) = summarize(&y);
    let se = sd.unwrap() / (y.len() as f64).sqrt();
    assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn standardized_columns_hit_target() {
    let data = generate(&GenSpec::new(Regression::B, 0.2, 3)).unwrap();
    let s = standardize(&data, 5.0).unwrap();
    for col in s.x.column_iter() {
        let v: Vec<f64> = col.iter().copied().collect();
        let (mean, sd) = summarize(&v);
        assert!(mean.abs() <= 1e-10);
        assert!((sd.unwrap() - 5.0).abs() <= 1e-8);
    }
}

#[test]
fn standardization_round_trip_barely_moves_isotropic_fit() {
    let data = generate(&GenSpec { regression: Regression::A, n: 1000, noise_or_a: 0.1, seed: 4 }).unwrap();
    let b_std = StiefelPoint::random(4, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let s = standardize(&data, 5.0).unwrap();
    let back = unstandardize_subspace(&b_std, s.standardization.as_ref().unwrap()).unwrap();
    assert!(projection_distance(&b_std, &back).unwrap() <= 0.05);
}

#[test]
fn sir_is_affine_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 5000;
    let x = DMatrix::from_fn(n, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DMatrix::from_fn(n, 1, |i, _| x[(i, 0)] + (x[(i, 1)] + x[(i, 2)]).powi(3) + 0.2 * rng.sample::<f64, _>(StandardNormal));
    let scales = [3.0, 0.5, 1.0, 7.0];
    let mut xs = x.clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        col *= scales[j];
    }
    let slices = SliceSpec::equal_count(10);
    let plain = fit_sir(&Dataset::new(x, y.clone()).unwrap(), 2, slices).unwrap().basis;
    let scaled = fit_sir(&Dataset::new(xs, y).unwrap(), 2, slices).unwrap().basis;
    // Directions fitted on D x act on x through D.
    let mut mapped = scaled.matrix().clone();
    for (j, mut row) in mapped.row_iter_mut().enumerate() {
        row *= scales[j];
    }
    let mapped = retract(&mapped).unwrap();
    assert!(projection_distance(&plain, &mapped).unwrap() <= 1e-6);
}

#[test]
fn save_on_noise_looks_like_a_random_subspace() {
    let reps = 300;
    let truth = StiefelPoint::axes(4, &[0]).unwrap();
    let mut save_d = Vec::new();
    let mut rand_d = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for r in 0..reps {
        let x = DMatrix::from_fn(200, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DMatrix::from_fn(200, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let fit = fit_save(&Dataset::new(x, y).unwrap(), 1, SliceSpec::equal_count(5)).unwrap();
        save_d.push(projection_distance(&truth, &fit.basis).unwrap());
        let random = StiefelPoint::random(4, 1, &mut ChaCha8Rng::seed_from_u64(10_000 + r)).unwrap();
        rand_d.push(projection_distance(&truth, &random).unwrap());
    }
    let (m1, s1) = summarize(&save_d);
    let (m2, s2) = summarize(&rand_d);
    let se = ((s1.unwrap().powi(2) + s2.unwrap().powi(2)) / reps as f64).sqrt();
    assert!((m1 - m2).abs() <= 4.0 * se, "SAVE {m1} vs random {m2} (se {se})");
}

#[test]
fn kdr_recovers_regression_a_in_most_runs() {
    let kcfg = KernelConfig::fixed(2.0).unwrap();
    let ocfg = OptimConfig::default();
    let runs = 20;
    let mut good = 0;
    for seed in 0..runs {
        let data = generate(&GenSpec::new(Regression::A, 0.1, 500 + seed)).unwrap();
        let s = standardize(&data, 1.0).unwrap();
        let fit = fit_kdr(&s, 2, &kcfg, RegCoeff::default(), &ocfg).unwrap();
        let est = unstandardize_subspace(&fit.b_hat, s.standardization.as_ref().unwrap()).unwrap();
        if projection_distance(data.true_b.as_ref().unwrap(), &est).unwrap() <= 0.35 {
            good += 1;
        }
    }
    assert!(good * 10 >= runs * 8, "{good}/{runs}");
}

#[test]
fn descent_is_invariant_to_rotating_the_start() {
    let data = generate(&GenSpec::new(Regression::A, 0.4, 8)).unwrap();
    let g_y = response_gram(&data.y, 2.0).unwrap();
    let obj = KdrObjective::new(&data.x, &g_y, RegCoeff::default()).unwrap();
    let kcfg = KernelConfig::fixed(2.0).unwrap();
    let ocfg = OptimConfig { iterations: 40, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = StiefelPoint::random(4, 2, &mut rng).unwrap();
    let q = retract(&DMatrix::from_fn(2, 2, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap();
    let rotated = StiefelPoint::new(start.matrix() * q.matrix()).unwrap();
    let a = descend(&obj, start, &kcfg, &ocfg).unwrap();
    let b = descend(&obj, rotated, &kcfg, &ocfg).unwrap();
    for (fa, fb) in a.objective_trace.iter().zip(&b.objective_trace) {
        assert!((fa - fb).abs() <= 1e-10 * (1.0 + fa.abs()), "{fa} vs {fb}");
    }
    assert!(projection_distance(&a.b_hat, &b.b_hat).unwrap() <= 1e-8);
}

#[test]
fn true_subspace_beats_random_subspace() {
    let kcfg = KernelConfig::fixed(2.0).unwrap();
    let reports = probe_trials(Regression::A, 0.1, 100, 1000, &kcfg, RegCoeff::default()).unwrap();
    let wins = reports.iter().filter(|r| r.containing_is_lower()).count();
    assert!(wins >= 95, "{wins}/100");
}
