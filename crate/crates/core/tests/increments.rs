use deformfield::increments::*;
use num_complex::Complex64;

fn real(xs: &[f64]) -> Vec<Complex64> {
    xs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn same_up_to_sign(row: &[f64], want: &[f64]) -> bool {
    let dot: f64 = row.iter().zip(want).map(|(a, b)| a * b).sum();
    row.iter().zip(want).all(|(a, b)| (a - dot.signum() * b).abs() < 1e-12)
}

#[test]
fn basis_shapes() {
    let pts = real(&[0.0, 1.0, 2.0]);
    let b0 = monomial_basis(&pts, 0);
    assert_eq!(b0.ncols(), 1);
    assert!((0..3).all(|i| b0[(i, 0)] == 1.0));
    assert_eq!(monomial_basis(&pts, 1).ncols(), 3);
    assert_eq!(monomial_basis(&pts, 2).ncols(), 6);
    assert_eq!(monomial_exponents(1), vec![(0, 0), (1, 0), (0, 1)]);
}

#[test]
fn first_difference() {
    let l = increment_matrix(&real(&[0.0, 1.0]), 0).unwrap();
    assert_eq!(l.n_rows(), 1);
    let r = [l.rows()[(0, 0)], l.rows()[(0, 1)]];
    let h = 0.5f64.sqrt();
    assert!(same_up_to_sign(&r, &[h, -h]), "{r:?}");
}

#[test]
fn second_difference_on_collinear_points() {
    let l = increment_matrix(&real(&[0.0, 1.0, 2.0]), 1).unwrap();
    assert_eq!(l.n_rows(), 1);
    let r: Vec<f64> = (0..3).map(|i| l.rows()[(0, i)]).collect();
    let s = 6f64.sqrt();
    assert!(same_up_to_sign(&r, &[1.0 / s, -2.0 / s, 1.0 / s]), "{r:?}");
}

#[test]
fn too_few_points() {
    let pts = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    let err = increment_matrix(&pts, 1).unwrap_err();
    assert!(err.to_string().starts_with("neighborhood smaller than polynomial space"));
}

#[test]
fn ten_by_ten_degree_two() {
    let pts: Vec<Complex64> =
        (0..100).map(|k| Complex64::new((k % 10) as f64 * 0.01, (k / 10) as f64 * 0.01)).collect();
    let l = increment_matrix(&pts, 2).unwrap();
    assert_eq!(l.n_rows(), 94);
    let b = monomial_basis(&pts, 2);
    let prod = l.rows() * &b;
    let worst = (0..prod.nrows())
        .flat_map(|r| (0..prod.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| prod[(r, c)].abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}
