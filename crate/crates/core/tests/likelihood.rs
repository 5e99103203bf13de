use deformfield::grid::Lattice;
use deformfield::likelihood::*;
use deformfield::simulate::{Provenance, SampleField};
use num_complex::Complex64;

#[test]
fn partition_counts() {
    assert_eq!(partition_grid(&Lattice::unit_square(100, 100), 10).unwrap().blocks.len(), 100);
    let p = partition_grid(&Lattice::unit_square(101, 101), 10).unwrap();
    assert_eq!(p.blocks.len(), 100);
    assert_eq!(p.dropped, 201);
    assert!(partition_grid(&Lattice::unit_square(8, 20), 10).is_err());
    assert!(partition_grid(&Lattice::unit_square(20, 20), 2).is_err());
}

#[test]
fn partition_blocks_are_disjoint() {
    let p = partition_grid(&Lattice::unit_square(23, 17), 5).unwrap();
    let mut all: Vec<usize> = p.blocks.concat();
    let n = all.len();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), n);
    assert_eq!((p.bx, p.by), (4, 3));
}

#[test]
fn aniso_g_examples() {
    let one = Complex64::new(1.0, 0.0);
    let iso = AnisotropyParams { mu: Complex64::new(0.0, 0.0), phi: 2.0 };
    assert!((aniso_g(&iso, 0.7, one).unwrap() + 2f64.powf(0.7)).abs() < 1e-12);
    assert!((aniso_g(&iso, 0.7, one).unwrap() + 1.624_505).abs() < 1e-6);
    let t = AnisotropyParams { mu: Complex64::new(0.5, 0.0), phi: 1.0 };
    assert!((aniso_g(&t, 0.7, one).unwrap() + 0.680_781_21).abs() < 1e-8);
    let bad = AnisotropyParams { mu: Complex64::new(1.0, 0.0), phi: 1.0 };
    assert!(aniso_g(&bad, 0.7, one).is_err());
}

#[test]
fn unconstrained_map_stays_in_disk() {
    for t in [[0.0, 0.0], [100.0, -3.0], [0.3, 0.4]] {
        assert!(mu_from_unconstrained(&t).norm() <= MU_MAX);
    }
    let m = mu_from_unconstrained(&[0.3f64.atanh(), 0.0]);
    assert!((m - Complex64::new(0.3, 0.0)).norm() < 1e-15);
}

#[test]
fn csv_round_trip() {
    let centers =
        vec![Complex64::new(0.1, 0.1), Complex64::new(0.3, 0.1), Complex64::new(0.1, 0.3), Complex64::new(0.3, 0.3)];
    let mut f = DilatationScaleField::constant(2, 2, centers, Complex64::new(0.2, -0.1), 1.5);
    f.status[3] = BlockStatus::Missing;
    f.mu[3] = Complex64::new(f64::NAN, f64::NAN);
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let g = DilatationScaleField::read_csv(&buf[..], f64::NAN).unwrap();
    assert_eq!((g.bx, g.by), (2, 2));
    assert_eq!(g.status, f.status);
    assert_eq!(g.mu[0], f.mu[0]);
    assert!(g.mu[3].re.is_nan());
}

fn block_sample(f: impl Fn(Complex64) -> f64) -> (Vec<usize>, SampleField) {
    let l = Lattice::unit_square(10, 10);
    let values = l.points().into_iter().map(f).collect();
    let prov = Provenance { model: "test".into(), deformation: "none".into(), seed: 0, noise_fraction: 0.0 };
    ((0..l.len()).collect(), SampleField::on_lattice(l, values, prov).unwrap())
}

#[test]
fn one_dimensional_data_is_rejected_as_degenerate() {
    // Variation along x only: the likelihood keeps improving towards |mu| = 1.
    let (block, data) = block_sample(|z| (13.0 * z.re).sin() + (31.0 * z.re).cos());
    let problem = BlockProblem::new(&block, &data, 2).unwrap();
    assert!(estimate_block_theta(&problem, 0.7, &ThetaOptions::default()).is_none());
}

#[test]
fn isotropic_pattern_gives_interior_estimate() {
    let (block, data) = block_sample(|z| (7.0 * z.re).sin() * (5.0 * z.im).cos() + (11.0 * z.im).sin() * z.re);
    let problem = BlockProblem::new(&block, &data, 2).unwrap();
    let est = estimate_block_theta(&problem, 0.7, &ThetaOptions::default()).unwrap();
    assert!(est.params.mu.norm() < MU_BOUNDARY);
    assert!(est.params.phi > 0.0 && est.neg_loglik.is_finite());
}
