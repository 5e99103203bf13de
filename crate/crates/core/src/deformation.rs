//! Deformations `f^{-1}` that carry observation coordinates back to the
//! isotropic frame.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dilatation::numeric_dilatation;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Lattice};

/// A deformation, always stored as the inverse map `f^{-1}` applied to
/// observation locations.
#[derive(Clone, Debug, PartialEq)]
pub enum DeformationSpec {
    /// `f^{-1}(x + iy) = (R - y) exp(-i pi (1 - x) / 2) + iR`: bends the unit
    /// square onto a quarter annulus. Valid for `y < R`.
    Rotational { radius: f64 },
    /// `z -> a z + b conj(z) + d`.
    Affine { a: Complex64, b: Complex64, d: Complex64 },
    /// Applies each stage in order: `stages[n-1] o ... o stages[0]`.
    Composed(Vec<DeformationSpec>),
    /// Bilinear interpolation of a sampled map, e.g. one produced by a flow.
    GridMap(ComplexGrid),
}

impl DeformationSpec {
    pub fn identity() -> Self {
        Self::Affine { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0), d: Complex64::new(0.0, 0.0) }
    }

    /// The quarter-annulus bend with `R = 1.2` used in the worked example.
    pub fn rotational_example() -> Self {
        Self::Rotational { radius: 1.2 }
    }

    pub fn shear(b: f64) -> Self {
        Self::Affine { a: Complex64::new(1.0, 0.0), b: Complex64::new(b, 0.0), d: Complex64::new(0.0, 0.0) }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rotational { .. } => "rotational",
            Self::Affine { .. } => "affine",
            Self::Composed(_) => "composed",
            Self::GridMap(_) => "grid-map",
        }
    }

    /// `f^{-1}(z)`.
    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Self::Rotational { radius } => {
                if z.im >= *radius {
                    return Err(Error::Domain(format!(
                        "point {z} lies outside the rotational map's domain (y < {radius})"
                    )));
                }
                let phase = Complex64::from_polar(1.0, -PI * (1.0 - z.re) / 2.0);
                Ok((radius - z.im) * phase + Complex64::new(0.0, *radius))
            }
            Self::Affine { a, b, d } => Ok(a * z + b * z.conj() + d),
            Self::Composed(stages) => stages.iter().try_fold(z, |w, s| s.apply(w)),
            Self::GridMap(map) => {
                map.sample_bilinear(z).ok_or_else(|| Error::Domain(format!("point {z} lies outside the sampled map")))
            }
        }
    }

    /// Closed-form dilatation where one exists.
    pub fn analytic_dilatation(&self, z: Complex64) -> Option<(Complex64, f64)> {
        match self {
            Self::Rotational { radius } => {
                let a = (radius - z.im) * PI / 2.0;
                Some((Complex64::new((a - 1.0) / (a + 1.0), 0.0), a.sqrt()))
            }
            Self::Affine { a, b, .. } => Some((b / a, (a.norm_sqr() - b.norm_sqr()).sqrt())),
            _ => None,
        }
    }

    /// Samples the map on every lattice site.
    pub fn evaluate_on(&self, lattice: &Lattice) -> Result<ComplexGrid> {
        let values = apply_deformation(self, &lattice.points())?;
        ComplexGrid::new(*lattice, values)
    }

    /// Checks orientation and bounded distortion by finite differences on a
    /// probe lattice.
    pub fn validate(&self, probe: &Lattice) -> Result<()> {
        let (mu, _) = numeric_dilatation(&self.evaluate_on(probe)?)?;
        if let Some((k, m)) = mu.values().iter().enumerate().find(|(_, m)| m.norm() > 1.0 - 1e-6) {
            return Err(Error::Distortion { site: k, modulus: m.norm() });
        }
        Ok(())
    }
}

/// `f^{-1}(z_i)` for every location.
pub fn apply_deformation(spec: &DeformationSpec, locations: &[Complex64]) -> Result<Vec<Complex64>> {
    locations.iter().map(|&z| spec.apply(z)).collect()
}
