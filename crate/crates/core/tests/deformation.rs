use deformfield::deformation::*;
use deformfield::grid::Lattice;
use num_complex::Complex64;
use std::f64::consts::PI;

#[test]
fn rotational_at_origin() {
    let w = DeformationSpec::rotational_example().apply(Complex64::new(0.0, 0.0)).unwrap();
    assert!(w.norm() < 1e-15, "{w}");
}

#[test]
fn identity_and_affine() {
    let z = Complex64::new(1.0, 1.0);
    assert_eq!(DeformationSpec::identity().apply(z).unwrap(), z);
    let w = DeformationSpec::shear(0.3).apply(z).unwrap();
    assert!((w - Complex64::new(1.3, 0.7)).norm() < 1e-15);
}

#[test]
fn outside_domain_names_point() {
    let err = DeformationSpec::rotational_example().apply(Complex64::new(0.5, 1.5)).unwrap_err();
    assert!(err.to_string().contains("0.5+1.5i"), "{err}");
}

#[test]
fn rotational_dilatation_matches_symbolic_derivative() {
    // f_x = (1.2 - y)(i pi/2) E, f_y = -E with E = exp(-i pi (1-x)/2).
    let z = Complex64::new(0.5, 0.5);
    let e = Complex64::from_polar(1.0, -PI * (1.0 - z.re) / 2.0);
    let fx = (1.2 - z.im) * Complex64::new(0.0, PI / 2.0) * e;
    let fy = -e;
    let dz = 0.5 * (fx - Complex64::i() * fy);
    let dzbar = 0.5 * (fx + Complex64::i() * fy);
    let (mu, phi) = DeformationSpec::rotational_example().analytic_dilatation(z).unwrap();
    assert!((mu - dzbar / dz).norm() < 1e-14);
    assert!((phi - (dz.norm_sqr() - dzbar.norm_sqr()).sqrt()).abs() < 1e-14);
    assert!((mu.re - 0.047_418).abs() < 1e-5 && mu.im.abs() < 1e-15);
    assert!((phi - 1.048_60).abs() < 1e-5);
}

#[test]
fn rotational_probe_validates() {
    DeformationSpec::rotational_example().validate(&Lattice::unit_square(21, 21)).unwrap();
    let bad = DeformationSpec::Affine {
        a: Complex64::new(0.2, 0.0),
        b: Complex64::new(1.0, 0.0),
        d: Complex64::new(0.0, 0.0),
    };
    assert!(bad.validate(&Lattice::unit_square(5, 5)).is_err());
}

#[test]
fn composed_applies_in_order() {
    let shift = DeformationSpec::Affine {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };
    let double = DeformationSpec::Affine {
        a: Complex64::new(2.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        d: Complex64::new(0.0, 0.0),
    };
    let c = DeformationSpec::Composed(vec![shift, double]);
    assert_eq!(c.apply(Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(4.0, 0.0));
}
