//! Hyperbolic geometry on the unit disk of dilatations: distance, Fréchet
//! means, smoothing and interpolation of dilatation fields, and the ellipse
//! form of a dilatation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Lattice};
use crate::likelihood::{BlockStatus, DilatationScaleField};

/// Iterates are kept at least this far inside the unit circle.
const EDGE: f64 = 1e-9;
const MAX_MEAN_ITER: usize = 1000;

fn check_disk(mu: Complex64) -> Result<()> {
    if mu.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{mu} is not inside the unit disk")))
    }
}

/// `(a - b) / (1 - a conj(b))`.
pub fn mobius_diff(a: Complex64, b: Complex64) -> Result<Complex64> {
    check_disk(a)?;
    check_disk(b)?;
    Ok((a - b) / (1.0 - a * b.conj()))
}

#[inline]
fn distance_unchecked(a: Complex64, b: Complex64) -> f64 {
    let m = ((a - b) / (1.0 - a * b.conj())).norm();
    m.min(1.0 - 1e-16).atanh()
}

/// `1/2 log((1 + m)/(1 - m))` with `m = |mobius_diff(a, b)|`.
pub fn hyperbolic_distance(a: Complex64, b: Complex64) -> Result<f64> {
    Ok(mobius_diff(a, b)?.norm().atanh())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseParams {
    /// Ratio of axes `K >= 1`.
    pub eccentricity: f64,
    /// Inclination in `[0, pi)`.
    pub inclination: f64,
}

pub fn mu_to_ellipse(mu: Complex64) -> Result<EllipseParams> {
    check_disk(mu)?;
    let m = mu.norm();
    let inclination = if m == 0.0 { 0.0 } else { ((-mu).arg() / 2.0).rem_euclid(PI) };
    Ok(EllipseParams { eccentricity: (1.0 + m) / (1.0 - m), inclination })
}

pub fn ellipse_to_mu(e: &EllipseParams) -> Result<Complex64> {
    if !(e.eccentricity >= 1.0) || !e.eccentricity.is_finite() {
        return Err(Error::Domain(format!("eccentricity must be >= 1, got {}", e.eccentricity)));
    }
    let k = e.eccentricity;
    Ok(-Complex64::from_polar((k - 1.0) / (k + 1.0), 2.0 * e.inclination))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrechetMean {
    pub point: Complex64,
    pub converged: bool,
    pub iterations: usize,
}

fn project(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 1.0 - EDGE {
        z * ((1.0 - EDGE) / r)
    } else {
        z
    }
}

/// Minimizer of `sum w_k d(mu, mu_k)^p` over the disk: projected gradient
/// descent with central finite-difference gradients and step halving, from
/// the Euclidean weighted mean.
pub fn frechet_mean(points: &[Complex64], weights: &[f64], p: f64) -> Result<FrechetMean> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::Invalid("Fréchet mean needs matching, non-empty points and weights".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) || !(p > 0.0) {
        return Err(Error::Invalid("Fréchet mean needs non-negative weights with positive sum and p > 0".into()));
    }
    for &z in points {
        check_disk(z)?;
    }
    let total: f64 = weights.iter().sum();
    let objective = |x: Complex64| -> f64 {
        points.iter().zip(weights).map(|(&z, &w)| w * distance_unchecked(x, z).powf(p)).sum::<f64>() / total
    };
    if points.len() == 1 || points.iter().all(|&z| z == points[0]) {
        return Ok(FrechetMean { point: points[0], converged: true, iterations: 0 });
    }
    // Intrinsic descent: recentre at the iterate, where geodesics through it
    // are rays, step along the weighted pull of the points, and map back.
    let mut x = project(points.iter().zip(weights).map(|(&z, &w)| z * w).sum::<Complex64>() / total);
    let mut fx = objective(x);
    let mut eta = 1.0;
    for it in 0..MAX_MEAN_ITER {
        let mut pull = Complex64::new(0.0, 0.0);
        for (&z, &w) in points.iter().zip(weights) {
            let u = (z - x) / (1.0 - x.conj() * z);
            let r = u.norm();
            if r > 0.0 {
                pull += w * p * r.min(1.0 - 1e-16).atanh().powf(p - 1.0) * u / r;
            }
        }
        pull /= total;
        let size = pull.norm();
        if size == 0.0 {
            return Ok(FrechetMean { point: x, converged: true, iterations: it });
        }
        loop {
            let s = eta * size / p.max(1.0);
            let y = Complex64::from_polar(s.tanh(), pull.arg());
            let cand = project((y + x) / (1.0 + x.conj() * y));
            let fc = objective(cand);
            // Sufficient decrease: a plain decrease test lets full steps
            // bounce across the minimum when the points are spread out.
            if fc <= fx - 0.1 * s * size {
                x = cand;
                fx = fc;
                eta = (2.0 * eta).min(1.0);
                if s < 1e-13 {
                    return Ok(FrechetMean { point: x, converged: true, iterations: it + 1 });
                }
                break;
            }
            eta *= 0.5;
            if eta * size < 1e-13 {
                return Ok(FrechetMean { point: x, converged: true, iterations: it + 1 });
            }
        }
    }
    Ok(FrechetMean { point: x, converged: false, iterations: MAX_MEAN_ITER })
}

/// Window offsets `-floor((w-1)/2) ..= floor(w/2)`; for `w = 4` that is
/// `-1..=2`.
fn window_range(centre: usize, window: usize, len: usize) -> std::ops::Range<usize> {
    let lo = centre.saturating_sub((window - 1) / 2);
    let hi = (centre + window / 2 + 1).min(len);
    lo..hi
}

/// Replaces each block's `mu` by the `p = 2` Fréchet mean over the
/// `window x window` patch around it, clipped at the lattice edges. Missing
/// blocks are excluded from means and imputed from their window. When
/// `smooth_phi` is set, `phi` is replaced by the geometric mean over the same
/// window; otherwise it is only imputed for missing blocks.
pub fn smooth_dilatation(
    field: &DilatationScaleField,
    window: usize,
    smooth_phi: bool,
) -> Result<DilatationScaleField> {
    if window == 0 || window > field.bx || window > field.by {
        return Err(Error::Invalid(format!(
            "window {window} does not fit the {}x{} block lattice",
            field.bx, field.by
        )));
    }
    let mut out = field.clone();
    for j in 0..field.by {
        for i in 0..field.bx {
            let k = field.index(i, j);
            let mut mus = Vec::new();
            let mut log_phi = 0.0;
            for jj in window_range(j, window, field.by) {
                for ii in window_range(i, window, field.bx) {
                    let q = field.index(ii, jj);
                    if field.is_available(q) {
                        mus.push(field.mu[q]);
                        log_phi += field.phi[q].ln();
                    }
                }
            }
            if mus.is_empty() {
                continue;
            }
            let weights = vec![1.0; mus.len()];
            out.mu[k] = frechet_mean(&mus, &weights, 2.0)?.point;
            let phi_mean = (log_phi / mus.len() as f64).exp();
            if !field.is_available(k) {
                out.phi[k] = phi_mean;
                out.status[k] = BlockStatus::Imputed;
            } else if smooth_phi {
                out.phi[k] = phi_mean;
            }
        }
    }
    Ok(out)
}

/// Block-centre lattice of a field: origin and spacing of the centres.
fn centre_grid(field: &DilatationScaleField) -> (Complex64, f64, f64) {
    let c0 = field.centers[0];
    let dx = if field.bx > 1 { field.centers[1].re - c0.re } else { 1.0 };
    let dy = if field.by > 1 { field.centers[field.bx].im - c0.im } else { 1.0 };
    (c0, dx, dy)
}

/// Fréchet mean of the four surrounding block values with bilinear weights.
/// Outside the hull of the centres, returns the nearest block's value and
/// `true` (extrapolated).
pub fn interpolate_dilatation(field: &DilatationScaleField, z: Complex64) -> Result<(Complex64, bool)> {
    let (c0, dx, dy) = centre_grid(field);
    let fx = (z.re - c0.re) / dx;
    let fy = (z.im - c0.im) / dy;
    let (mx, my) = ((field.bx - 1) as f64, (field.by - 1) as f64);
    let tol = 1e-9;
    let outside = fx < -tol || fy < -tol || fx > mx + tol || fy > my + tol;
    let fx = fx.clamp(0.0, mx);
    let fy = fy.clamp(0.0, my);
    if outside {
        let k = field.index(fx.round() as usize, fy.round() as usize);
        if field.is_available(k) {
            return Ok((field.mu[k], true));
        }
    }
    let i = (fx.floor() as usize).min(field.bx.saturating_sub(2));
    let j = (fy.floor() as usize).min(field.by.saturating_sub(2));
    let (s, t) = (fx - i as f64, fy - j as f64);
    let mut pts = Vec::with_capacity(4);
    let mut ws = Vec::with_capacity(4);
    for (di, dj, w) in [(0, 0, (1.0 - s) * (1.0 - t)), (1, 0, s * (1.0 - t)), (0, 1, (1.0 - s) * t), (1, 1, s * t)] {
        let (ii, jj) = (i + di, j + dj);
        if ii >= field.bx || jj >= field.by || w <= 0.0 {
            continue;
        }
        let k = field.index(ii, jj);
        if field.is_available(k) {
            pts.push(field.mu[k]);
            ws.push(w);
        }
    }
    if pts.is_empty() {
        return Err(Error::Estimation(format!("no available block near {z}")));
    }
    Ok((frechet_mean(&pts, &ws, 2.0)?.point, outside))
}

/// Interpolates the field's `mu` onto every site of `lattice`; also returns
/// how many sites were extrapolated.
pub fn interpolate_onto(field: &DilatationScaleField, lattice: &Lattice) -> Result<(ComplexGrid, usize)> {
    let mut extrapolated = 0;
    let mut values = Vec::with_capacity(lattice.len());
    for z in lattice.points() {
        let (mu, ext) = interpolate_dilatation(field, z)?;
        extrapolated += ext as usize;
        values.push(mu);
    }
    Ok((ComplexGrid::new(*lattice, values)?, extrapolated))
}
