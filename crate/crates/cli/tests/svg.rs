use deformfield::{ComplexGrid, Grid};
use deformfield_cli::svg::*;

use deformfield::Lattice;

#[test]
fn warped_grid_of_shear_has_polylines() {
    let l = Lattice::unit_square(11, 11);
    let map = ComplexGrid::from_fn(l, |z| z + 0.3 * z.conj());
    let s = warped_grid(&map, 5, "shear");
    assert!(s.starts_with("<svg"));
    assert!(s.trim_end().ends_with("</svg>"));
    assert_eq!(s.matches("<polyline").count(), 6);
}

#[test]
fn heatmap_spans_the_color_ramp() {
    let l = Lattice::unit_square(4, 3);
    let s = heatmap(&Grid::from_fn(l, |z| z.re + z.im), "ramp");
    assert_eq!(s.matches("<rect x=").count(), 12);
    assert!(s.contains("fill=\"#0000ff\""));
    assert!(s.contains("fill=\"#ff0000\""));
}
