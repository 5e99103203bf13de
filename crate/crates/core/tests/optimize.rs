use deformfield::optimize::*;

#[test]
fn golden_finds_parabola_minimum() {
    let (x, fx) = golden_section(|x| (x - 0.7).powi(2) + 1.0, 0.05, 4.0, 1e-6);
    assert!((x - 0.7).abs() < 1e-6);
    assert!((fx - 1.0).abs() < 1e-12);
}

#[test]
fn golden_treats_nan_as_infeasible() {
    let (x, _) = golden_section(|x| if x > 2.0 { f64::NAN } else { (x - 1.0).powi(2) }, 0.0, 4.0, 1e-6);
    assert!((x - 1.0).abs() < 1e-5);
}

#[test]
fn nelder_mead_rosenbrock() {
    let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let opts = NelderMeadOptions { max_evals: 5000, f_tol: 1e-14, x_tol: 1e-8, initial_step: 0.5 };
    let m = nelder_mead(rosen, &[-1.2, 1.0], &opts);
    assert!(m.converged);
    assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
}
