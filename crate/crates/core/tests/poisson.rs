use deformfield::grid::Grid;
use deformfield::poisson::*;
use std::f64::consts::PI;

use deformfield::grid::Lattice;

#[test]
fn discrete_eigenfunction_is_solved_exactly() {
    // sin(k pi x) sin(l pi y) is an eigenvector of the 5-point Laplacian.
    let (n, k, l) = (17usize, 3.0, 5.0);
    let lat = Lattice::unit_square(n, n);
    let h = lat.dx;
    let lam = -4.0 / (h * h) * ((k * PI * h / 2.0).sin().powi(2) + (l * PI * h / 2.0).sin().powi(2));
    let mode = Grid::from_fn(lat, |z| (k * PI * z.re).sin() * (l * PI * z.im).sin());
    let u = poisson_solve_dirichlet(&mode.map(|v| lam * v)).unwrap();
    let worst = u.values().iter().zip(mode.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn zero_rhs() {
    let u = poisson_solve_dirichlet(&Grid::filled(Lattice::unit_square(9, 9), 0.0)).unwrap();
    assert!(u.values().iter().all(|&v| v == 0.0));
}

#[test]
fn residual_is_tiny_on_rectangular_grid() {
    let l = Lattice::new(23, 17, -1.0, 0.5, 0.07, 0.11).unwrap();
    let rhs = Grid::from_fn(l, |z| (3.0 * z.re).cos() * z.im + z.re * z.re);
    let u = poisson_solve_dirichlet(&rhs).unwrap();
    assert!(relative_residual(&u, &rhs) < 1e-10);
    for i in 0..l.nx {
        assert_eq!(u.at(i, 0), 0.0);
        assert_eq!(u.at(i, l.ny - 1), 0.0);
    }
}
