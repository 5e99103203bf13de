//! Finite-difference Wirtinger derivatives, complex dilatation and scale of a
//! map sampled on a lattice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Field, Grid, Lattice};

/// `(d/dz f, d/dzbar f)` at every site. Central differences inside,
/// second-order one-sided differences on the edges.
pub fn wirtinger_derivatives(map: &ComplexGrid) -> Result<(ComplexGrid, ComplexGrid)> {
    let l = *map.lattice();
    if l.nx < 3 || l.ny < 3 {
        return Err(Error::Invalid(format!("dilatation needs at least 3x3 sites, got {}x{}", l.nx, l.ny)));
    }
    let f = map.values();
    let mut dz = Vec::with_capacity(l.len());
    let mut dzbar = Vec::with_capacity(l.len());
    for j in 0..l.ny {
        for i in 0..l.nx {
            let fx = diff(|k| f[l.index(k, j)], i, l.nx, l.dx);
            let fy = diff(|k| f[l.index(i, k)], j, l.ny, l.dy);
            let i_fy = Complex64::i() * fy;
            dz.push(0.5 * (fx - i_fy));
            dzbar.push(0.5 * (fx + i_fy));
        }
    }
    Ok((Field::new(l, dz)?, Field::new(l, dzbar)?))
}

#[inline]
fn diff(f: impl Fn(usize) -> Complex64, k: usize, n: usize, h: f64) -> Complex64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// Complex dilatation `mu = f_zbar / f_z` and scale `phi = sqrt(det J)` of a
/// sampled map. Fails when the Jacobian determinant is not positive somewhere.
pub fn numeric_dilatation(map: &ComplexGrid) -> Result<(ComplexGrid, Grid)> {
    let (dz, dzbar) = wirtinger_derivatives(map)?;
    dilatation_from_derivatives(&dz, &dzbar)
}

pub fn dilatation_from_derivatives(dz: &ComplexGrid, dzbar: &ComplexGrid) -> Result<(ComplexGrid, Grid)> {
    let l: Lattice = *dz.lattice();
    let mut bad = Vec::new();
    let mut mu = Vec::with_capacity(l.len());
    let mut phi = Vec::with_capacity(l.len());
    for (k, (&a, &b)) in dz.values().iter().zip(dzbar.values()).enumerate() {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) {
            bad.push(l.coords(k));
            mu.push(Complex64::new(0.0, 0.0));
            phi.push(0.0);
            continue;
        }
        mu.push(b / a);
        phi.push(det.sqrt());
    }
    if !bad.is_empty() {
        return Err(Error::Orientation { cells: bad });
    }
    Ok((Field::new(l, mu)?, Field::new(l, phi)?))
}

/// Whether `(i, j)` is at least `band` sites away from every edge.
pub fn is_interior(l: &Lattice, i: usize, j: usize, band: usize) -> bool {
    i >= band && j >= band && i + band < l.nx && j + band < l.ny
}
