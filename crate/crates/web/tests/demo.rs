use kdr_web::{compare, landscape, run_fit};

#[test]
fn fit_recovers_regression_b() {
    let view = run_fit("B", 0.1, 100, 3, 50).unwrap();
    assert_eq!(view.dim(), 1);
    assert_eq!(view.basis().len(), 4);
    assert_eq!(view.projected(0).len(), 100);
    assert_eq!(view.response().len(), 100);
    assert_eq!(view.trace().len(), 50);
    assert!(view.trace().windows(2).all(|w| w[1] <= w[0]));
    assert!(view.distance() < 0.3, "{}", view.distance());
}

#[test]
fn landscape_is_lowest_at_the_true_subspace() {
    let curve = landscape("A", 0.1, 100, 1, 9).unwrap();
    assert_eq!(curve.len(), 18);
    let values: Vec<f64> = curve.chunks(2).map(|p| p[1]).collect();
    assert!(values.iter().all(|&v| v >= values[0]), "{values:?}");
    assert_eq!(curve[0], 0.0);
    assert!((curve[16] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn compare_returns_one_mean_per_method() {
    let means = compare("C", 0.0, 2, 0, 10).unwrap();
    assert_eq!(means.len(), 4);
    assert!(means.iter().all(|m| m.is_finite()));
}

#[test]
fn unknown_regression_is_an_error() {
    assert!(run_fit("Z", 0.1, 50, 0, 5).is_err());
    assert!(landscape("A", 0.1, 50, 0, 1).is_err());
}
