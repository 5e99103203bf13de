use std::f64::consts::PI;

use deformfield::conformal::{
    distance_d1_maps, distance_d2_fields, fit_log_scale, integrate_hprime_path, DiskTransform, HarmonicFit,
};
use deformfield::dilatation::numeric_dilatation;
use deformfield::disk::{ellipse_to_mu, frechet_mean, hyperbolic_distance, mu_to_ellipse};
use deformfield::flow::{reconstruct_map, FlowOptions};
use deformfield::increments::{increment_matrix, monomial_basis};
use deformfield::poisson::{poisson_solve_dirichlet, relative_residual};
use deformfield::{ComplexGrid, Grid, Lattice};
use num_complex::Complex64;
use proptest::prelude::*;

fn disk_point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn unit_square_point() -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

fn automorphism(theta: f64, a: Complex64) -> impl Fn(Complex64) -> Complex64 {
    move |z| Complex64::from_polar(1.0, theta) * (z - a) / (1.0 - a.conj() * z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyperbolic_distance_is_a_metric(a in disk_point(0.95), b in disk_point(0.95), c in disk_point(0.95)) {
        let d = |x, y| hyperbolic_distance(x, y).unwrap();
        prop_assert!(d(a, a).abs() < 1e-12);
        prop_assert!(d(a, b) >= 0.0);
        prop_assert!((d(a, b) - d(b, a)).abs() < 1e-12);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-10);
    }

    #[test]
    fn hyperbolic_distance_is_mobius_invariant(
        a in disk_point(0.9), b in disk_point(0.9), m in disk_point(0.9), theta in 0.0..2.0 * PI,
    ) {
        let t = automorphism(theta, m);
        let before = hyperbolic_distance(a, b).unwrap();
        let after = hyperbolic_distance(t(a), t(b)).unwrap();
        prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
    }

    #[test]
    fn ellipse_round_trip(mu in disk_point(0.95)) {
        let back = ellipse_to_mu(&mu_to_ellipse(mu).unwrap()).unwrap();
        prop_assert!((back - mu).norm() < 1e-12, "{} vs {}", back, mu);
    }

    #[test]
    fn frechet_mean_is_mobius_equivariant(
        pts in prop::collection::vec(disk_point(0.8), 2..6), m in disk_point(0.5), theta in 0.0..2.0 * PI,
    ) {
        let w = vec![1.0; pts.len()];
        let t = automorphism(theta, m);
        let mean = frechet_mean(&pts, &w, 2.0).unwrap().point;
        let moved: Vec<Complex64> = pts.iter().map(|&p| t(p)).collect();
        let mean_moved = frechet_mean(&moved, &w, 2.0).unwrap().point;
        prop_assert!(hyperbolic_distance(t(mean), mean_moved).unwrap() < 1e-5);
    }

    #[test]
    fn contrasts_annihilate_polynomials(pts in prop::collection::vec(unit_square_point(), 12..40), degree in 0usize..=3) {
        let l = increment_matrix(&pts, degree).unwrap();
        let prod = l.rows() * &monomial_basis(&pts, degree);
        let worst = (0..prod.nrows()).flat_map(|r| (0..prod.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| prod[(r, c)].abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-10, "{}", worst);
        // Rows are orthonormal.
        let gram = l.rows() * l.rows().transpose();
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn contrasts_are_translation_invariant(pts in prop::collection::vec(unit_square_point(), 8..30), shift in unit_square_point()) {
        let y: Vec<f64> = pts.iter().map(|z| (3.0 * z.re).sin() + z.im * z.im).collect();
        let l = increment_matrix(&pts, 1).unwrap();
        let moved: Vec<Complex64> = pts.iter().map(|z| z + shift).collect();
        let lm = increment_matrix(&moved, 1).unwrap();
        // Same span: projections of y onto both contrast spaces agree.
        let norm = |c: Vec<f64>| c.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm(l.apply(&y)) - norm(lm.apply(&y))).abs() < 1e-9);
    }

    #[test]
    fn poisson_residual_is_small(nx in 5usize..30, ny in 5usize..30, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let l = Lattice::new(nx, ny, 0.0, 0.0, 1.0 / nx as f64, 1.3 / ny as f64).unwrap();
        let rhs = Grid::from_fn(l, |z| (a * z.re).sin() + b * z.im * z.re);
        let u = poisson_solve_dirichlet(&rhs).unwrap();
        prop_assert!(relative_residual(&u, &rhs) < 1e-9);
    }

    #[test]
    fn affine_dilatation_is_exact(a in disk_point(0.9).prop_map(|z| z + 1.5), k in disk_point(0.9)) {
        let b = k * a.conj();
        let l = Lattice::unit_square(6, 5);
        let (mu, phi) = numeric_dilatation(&ComplexGrid::from_fn(l, |z| a * z + b * z.conj())).unwrap();
        let want_mu = b / a;
        let want_phi = (a.norm_sqr() - b.norm_sqr()).sqrt();
        for (m, p) in mu.values().iter().zip(phi.values()) {
            prop_assert!((m - want_mu).norm() < 1e-9);
            prop_assert!((p - want_phi).abs() < 1e-9);
        }
    }

    #[test]
    fn distances_ignore_rigid_motions(theta in 0.0..2.0 * PI, shift in unit_square_point(), s in 0.0..0.3f64) {
        let l = Lattice::unit_square(12, 10);
        let f = ComplexGrid::from_fn(l, |z| z + s * z * z);
        let g = f.map(|z| Complex64::from_polar(1.0, theta) * z + 10.0 * shift);
        prop_assert!(distance_d1_maps(&f, &g, 500, 1).unwrap() < 1e-12);
        let (mf, _) = numeric_dilatation(&f).unwrap();
        let (mg, _) = numeric_dilatation(&g).unwrap();
        prop_assert!(distance_d2_fields(&mf, &mg).unwrap() < 1e-12);
    }

    #[test]
    fn harmonic_residual_does_not_grow_with_order(pts in prop::collection::vec(disk_point(0.9), 40..80), c in -1.0..1.0f64) {
        let targets: Vec<f64> = pts.iter().map(|z| (c * z.re).exp() * z.im + z.norm_sqr()).collect();
        let mut last = f64::INFINITY;
        for n in 1..=5 {
            let r = fit_log_scale(&pts, &targets, n).unwrap().residual;
            prop_assert!(r <= last + 1e-12, "order {}: {} > {}", n, r, last);
            last = r;
        }
    }

    #[test]
    fn hprime_integral_is_path_independent(coef in prop::collection::vec(disk_point(0.5), 1..5), mid in disk_point(0.8), end in disk_point(0.8)) {
        let fit = HarmonicFit { coefficients: coef, transform: DiskTransform::IDENTITY, residual: 0.0, rank_deficient: false };
        let origin = Complex64::new(0.0, 0.0);
        let direct = integrate_hprime_path(&fit, &[origin, end]);
        let detour = integrate_hprime_path(&fit, &[origin, mid, end]);
        prop_assert!((direct - detour).norm() < 1e-10, "{} vs {}", direct, detour);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_of_zero_dilatation_is_identity(nx in 6usize..20, ny in 6usize..20, steps in 1usize..6) {
        let l = Lattice::unit_square(nx, ny);
        let rec = reconstruct_map(&ComplexGrid::filled(l, Complex64::new(0.0, 0.0)), &FlowOptions { steps, ..Default::default() }).unwrap();
        let pts = l.points();
        let worst = rec.map.values().iter().zip(&pts).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{}", worst);
    }

    #[test]
    fn flow_reproduces_small_constant_dilatation(re in -0.2..0.2f64, im in -0.2..0.2f64) {
        let l = Lattice::unit_square(24, 24);
        let target = Complex64::new(re, im);
        let rec = reconstruct_map(&ComplexGrid::filled(l, target), &FlowOptions::default()).unwrap();
        let mid = rec.mu.at(12, 12);
        prop_assert!((mid - target).norm() < 0.01, "{} vs {}", mid, target);
    }
}
