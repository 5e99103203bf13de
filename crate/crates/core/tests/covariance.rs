use deformfield::covariance::*;

#[test]
fn p_alpha_branches() {
    assert_eq!(p_alpha(0.7).unwrap(), 0);
    assert_eq!(p_alpha(2.0).unwrap(), 0);
    assert_eq!(p_alpha(3.0).unwrap(), 1);
    assert_eq!(p_alpha(4.0).unwrap(), 1);
    assert!(p_alpha(0.0).is_err());
    assert!(p_alpha(-1.0).is_err());
}

#[test]
fn g_alpha_examples() {
    assert_eq!(g_alpha(0.7, 1.0).unwrap(), -1.0);
    let e = std::f64::consts::E;
    assert!((g_alpha(2.0, e).unwrap() - e * e).abs() < 1e-12);
    assert_eq!(g_alpha(3.0, 2.0).unwrap(), 8.0);
    assert_eq!(g_alpha(2.0, 0.0).unwrap(), 0.0);
    assert_eq!(g_alpha(0.7, 0.0).unwrap(), 0.0);
    // alpha = 4: (-1)^3 t^4 log t
    assert!((g_alpha(4.0, e).unwrap() + e.powi(4)).abs() < 1e-10);
}

#[test]
fn variance_at_origin() {
    let m = CovarianceModel::powered_exponential(1.0, 1.0, 0.7).unwrap();
    assert_eq!(m.eval(0.0), 1.0);
    assert!((CovarianceModel::rough_example().eval(0.0) - 0.5151).abs() < 1e-15);
    assert!((CovarianceModel::smooth_example().eval(0.0) - 0.0231).abs() < 1e-15);
}

#[test]
fn rough_example_expansion() {
    let m = CovarianceModel::rough_example();
    assert!((m.c() - 1.0).abs() < 1e-12);
    assert!((m.range() - 0.364).abs() < 1e-3, "range {}", m.range());
    // K(t) = 0.5151 - t^0.7 + O(t^2)
    for &t in &[1e-3, 1e-2] {
        let resid = m.eval(t) - (0.5151 - t.powf(0.7));
        assert!(resid.abs() < 2.0 * t * t, "t={t} resid={resid}");
    }
}

#[test]
fn smooth_example_expansion() {
    let m = CovarianceModel::smooth_example();
    assert!((m.c() - 1.0).abs() < 1e-12);
    let poly = m.polynomial_part();
    assert_eq!(poly.len(), 2);
    assert!((poly[0] - 0.0231).abs() < 1e-15);
    assert!((poly[1] + 0.4034).abs() < 1e-12);
    let t: f64 = 1e-2;
    let resid = m.eval(t) - (0.0231 - 0.4034 * t * t + t.powi(3));
    assert!(resid.abs() < 50.0 * t.powi(4), "resid={resid}");
}

fn expansion_ratio(m: &CovarianceModel, t: f64) -> f64 {
    let poly: f64 = m.polynomial_part().iter().enumerate().map(|(k, a)| a * t.powi(2 * k as i32)).sum();
    (m.eval(t) - poly) / (m.c() * g_alpha(m.alpha(), t).unwrap())
}

#[test]
fn expansion_ratio_tends_to_one() {
    let pe = CovarianceModel::powered_exponential(1.3, 0.8, 0.7).unwrap();
    assert!((expansion_ratio(&pe, 1e-3) - 1.0).abs() < 0.1);
    assert!((expansion_ratio(&pe, 1e-4) - 1.0).abs() < (expansion_ratio(&pe, 1e-2) - 1.0).abs());

    let models = [
        CovarianceModel::matern(1.0, 0.5, 0.7).unwrap(),
        CovarianceModel::matern(2.0, 0.3, 1.5).unwrap(),
        CovarianceModel::matern(1.0, 0.4, 3.0).unwrap(),
        CovarianceModel::smooth_example(),
    ];
    for m in &models {
        let r = expansion_ratio(m, 1e-3);
        assert!((r - 1.0).abs() < 0.05, "{:?}: ratio {r}", m.family());
    }
    // The log branch converges only logarithmically.
    let log_branch = CovarianceModel::matern(1.0, 0.4, 2.0).unwrap();
    let coarse = (expansion_ratio(&log_branch, 1e-2) - 1.0).abs();
    let fine = (expansion_ratio(&log_branch, 1e-6) - 1.0).abs();
    assert!(fine < coarse && fine < 0.15, "coarse {coarse} fine {fine}");
}

#[test]
fn powered_exponential_rejects_alpha_two() {
    assert!(CovarianceModel::powered_exponential(1.0, 1.0, 2.0).is_err());
    assert!(CovarianceModel::polynomial_plus_fractional(0.0231, 0.4034, 3.0, 1.0, 0.5).is_err());
}
