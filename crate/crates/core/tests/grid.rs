use deformfield::grid::*;
use num_complex::Complex64;

#[test]
fn cell_location_is_exact() {
    let l = Lattice::new(3, 2, 0.5, -1.0, 0.25, 2.0).unwrap();
    assert_eq!(l.point(2, 1), Complex64::new(1.0, 1.0));
    assert_eq!(l.index(2, 1), 5);
    assert_eq!(l.coords(5), (2, 1));
}

#[test]
fn grd1_header_layout() {
    let l = Lattice::new(2, 1, 0.0, 0.0, 1.0, 1.0).unwrap();
    let g = Grid::new(l, vec![1.5, -2.0]).unwrap();
    let bytes = g.to_grd1_bytes();
    assert_eq!(&bytes[..4], b"GRD1");
    assert_eq!(bytes[4], 0);
    assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 2);
    assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 1);
    assert_eq!(bytes.len(), 45 + 16);
    assert_eq!(f64::from_le_bytes(bytes[45..53].try_into().unwrap()), 1.5);
}

#[test]
fn grd1_rejects_wrong_kind() {
    let l = Lattice::unit_square(2, 2);
    let g = ComplexGrid::filled(l, Complex64::new(1.0, 2.0));
    let bytes = g.to_grd1_bytes();
    assert!(Grid::from_grd1_bytes(&bytes).is_err());
    assert_eq!(ComplexGrid::from_grd1_bytes(&bytes).unwrap(), g);
}

#[test]
fn rejects_non_finite() {
    let l = Lattice::unit_square(2, 2);
    assert!(Grid::new(l, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
}

#[test]
fn bilinear_reproduces_affine() {
    let l = Lattice::new(5, 4, -1.0, 0.0, 0.5, 0.3).unwrap();
    let g = Grid::from_fn(l, |z| 2.0 * z.re - 3.0 * z.im + 1.0);
    let z = Complex64::new(0.13, 0.71);
    let v = g.sample_bilinear(z).unwrap();
    assert!((v - (2.0 * 0.13 - 3.0 * 0.71 + 1.0)).abs() < 1e-12);
    assert!(g.sample_bilinear(Complex64::new(5.0, 0.0)).is_none());
}

#[test]
fn csv_has_header() {
    let g = ComplexGrid::filled(Lattice::unit_square(2, 2), Complex64::new(0.5, -0.5));
    let mut out = Vec::new();
    g.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,re,im"));
    assert_eq!(lines.next(), Some("0,0,0.5,-0.5"));
    assert_eq!(text.lines().count(), 5);
}
