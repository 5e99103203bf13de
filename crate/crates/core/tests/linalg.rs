use deformfield::linalg::*;
use faer::Mat;

#[test]
fn logdet_of_diagonal() {
    let s = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let (ld, q) = logdet_and_quadratic(&s, &[1.0, 2.0, 3.0]).unwrap();
    assert!((ld - 6f64.ln()).abs() < 1e-9);
    assert!((q - (1.0 + 2.0 + 3.0)).abs() < 1e-9);
}

#[test]
fn indefinite_is_rejected() {
    let s = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
    assert!(logdet_and_quadratic(&s, &[1.0, 1.0]).is_none());
}

#[test]
fn factor_reproduces_matrix() {
    let n = 4;
    let a = |i: usize, j: usize| if i == j { 2.0 } else { 0.5f64.powi((i as i32 - j as i32).abs()) };
    let (l, _) = cholesky_jittered(n, 2.0, |mut m| {
        for j in 0..n {
            for i in j..n {
                m[(i, j)] = a(i, j);
            }
        }
    })
    .unwrap();
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..=j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            assert!((s - a(i, j)).abs() < 1e-9);
        }
    }
    let y = lower_mul(&l, &[1.0, 0.0, 0.0, 0.0]);
    assert!((y[0] - l[(0, 0)]).abs() < 1e-15 && (y[3] - l[(3, 0)]).abs() < 1e-15);
}
