//! Contrast matrices: orthonormal rows annihilating every bivariate monomial
//! up to a given degree on a set of points.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of monomials `x^a y^b` with `a + b <= degree`.
pub fn monomial_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponents `(r1, r2)` ordered by total degree, then by descending `r1`:
/// `1, x, y, x^2, xy, y^2, ...`.
pub fn monomial_exponents(degree: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(monomial_dim(degree));
    for s in 0..=degree as i32 {
        for r1 in (0..=s).rev() {
            out.push((r1, s - r1));
        }
    }
    out
}

/// `m x dim` matrix of monomials evaluated at the points, each column scaled
/// by its largest absolute entry.
pub fn monomial_basis(locations: &[Complex64], degree: usize) -> Mat<f64> {
    let exps = monomial_exponents(degree);
    let mut m = Mat::<f64>::from_fn(locations.len(), exps.len(), |i, k| {
        let (a, b) = exps[k];
        locations[i].re.powi(a) * locations[i].im.powi(b)
    });
    for k in 0..exps.len() {
        let scale = (0..locations.len()).map(|i| m[(i, k)].abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            for i in 0..locations.len() {
                m[(i, k)] /= scale;
            }
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct ContrastMatrix {
    rows: Mat<f64>,
    degree: usize,
    locations: Vec<Complex64>,
}

impl ContrastMatrix {
    /// `m' x m` matrix with orthonormal rows.
    pub fn rows(&self) -> &Mat<f64> {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn locations(&self) -> &[Complex64] {
        &self.locations
    }

    /// `L y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows.nrows()).map(|r| (0..y.len()).map(|i| self.rows[(r, i)] * y[i]).sum()).collect()
    }

    /// `L G L'` for a symmetric `m x m` matrix `g`.
    pub fn congruence(&self, g: &Mat<f64>) -> Mat<f64> {
        let lg = &self.rows * g;
        &lg * self.rows.transpose()
    }
}

/// Orthonormal basis of the contrasts annihilating polynomials of total
/// degree `<= degree`, via the SVD of the monomial matrix. Points are centred
/// and rescaled first; polynomial spaces are invariant under affine changes of
/// coordinates, so the null space is unchanged while conditioning improves.
pub fn increment_matrix(locations: &[Complex64], degree: usize) -> Result<ContrastMatrix> {
    let m = locations.len();
    let dim = monomial_dim(degree);
    if m == 0 {
        return Err(Error::TooFewPoints { points: 0, dim });
    }
    let centre = locations.iter().sum::<Complex64>() / m as f64;
    let radius = locations.iter().map(|z| (z - centre).norm()).fold(0.0, f64::max);
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let scaled: Vec<Complex64> = locations.iter().map(|z| (z - centre) / radius).collect();
    let basis = monomial_basis(&scaled, degree);
    let svd = basis.svd().map_err(|e| Error::Estimation(format!("SVD of monomial matrix failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if dim > 0 && m > 0 { s[0] } else { 0.0 };
    let rank = (0..s.nrows()).filter(|&i| s[i] > 1e-10 * smax).count();
    if m <= rank {
        return Err(Error::TooFewPoints { points: m, dim });
    }
    let u = svd.U();
    let rows = Mat::<f64>::from_fn(m - rank, m, |r, i| u[(i, rank + r)]);
    Ok(ContrastMatrix { rows, degree, locations: locations.to_vec() })
}
