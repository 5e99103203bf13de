//! Conformal post-correction of a reconstructed map from the estimated scale
//! field, and distances between deformations.

use faer::Mat;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deformation::DeformationSpec;
use crate::dilatation::{is_interior, numeric_dilatation};
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Grid};
use crate::likelihood::DilatationScaleField;

/// `w -> (w - center) / radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskTransform {
    pub center: Complex64,
    pub radius: f64,
}

impl DiskTransform {
    pub const IDENTITY: Self = Self { center: Complex64 { re: 0.0, im: 0.0 }, radius: 1.0 };

    pub fn forward(&self, w: Complex64) -> Complex64 {
        (w - self.center) / self.radius
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        w * self.radius + self.center
    }
}

/// Scales points into the unit disk about their bounding-box centre, with
/// radius 1.05 times the largest distance from it.
pub fn embed_to_disk(points: &[Complex64]) -> Result<(Vec<Complex64>, DiskTransform)> {
    if points.is_empty() {
        return Err(Error::Invalid("cannot embed an empty point set".into()));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let center = (lo + hi) / 2.0;
    let far = points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    let radius = if far > 0.0 { 1.05 * far } else { 1.0 };
    let t = DiskTransform { center, radius };
    Ok((points.iter().map(|&p| t.forward(p)).collect(), t))
}

/// Truncated series `g(w) = sum_{n <= N} A_n w^n` with `Re g` fitted to a
/// log-scale target; `b_0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicFit {
    pub coefficients: Vec<Complex64>,
    pub transform: DiskTransform,
    /// RMS least-squares residual.
    pub residual: f64,
    pub rank_deficient: bool,
}

impl HarmonicFit {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn series(&self, w: Complex64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * w + a)
    }

    /// `|h'(w)| = exp(Re g(w))`.
    pub fn log_scale(&self, w: Complex64) -> f64 {
        self.series(w).re
    }
}

/// Least squares for `Re g(w_j) ~ targets_j` with columns
/// `1, Re w^n, -Im w^n`, via the SVD with a minimal-norm solution.
pub fn fit_log_scale(points: &[Complex64], targets: &[f64], order: usize) -> Result<HarmonicFit> {
    if order == 0 {
        return Err(Error::Invalid("harmonic order must be at least 1".into()));
    }
    let cols = 2 * order + 1;
    if points.len() != targets.len() || points.len() < cols {
        return Err(Error::Invalid(format!(
            "harmonic fit of order {order} needs at least {cols} matching points and targets, got {} and {}",
            points.len(),
            targets.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.norm() < 1.0)) {
        return Err(Error::Domain(format!("fit point {p} is not inside the unit disk")));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("non-finite log-scale target".into()));
    }
    let m = points.len();
    let mut design = Mat::<f64>::zeros(m, cols);
    for (r, &w) in points.iter().enumerate() {
        let mut wn = Complex64::new(1.0, 0.0);
        design[(r, 0)] = 1.0;
        for n in 1..=order {
            wn *= w;
            design[(r, n)] = wn.re;
            design[(r, order + n)] = -wn.im;
        }
    }
    let svd = design.thin_svd().map_err(|e| Error::Estimation(format!("SVD of harmonic design failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let smax = s[0];
    let mut coef = vec![0.0; cols];
    let mut rank = 0;
    for k in 0..cols {
        if s[k] <= 1e-12 * smax {
            continue;
        }
        rank += 1;
        let proj: f64 = (0..m).map(|r| u[(r, k)] * targets[r]).sum::<f64>() / s[k];
        for c in 0..cols {
            coef[c] += v[(c, k)] * proj;
        }
    }
    let residual = ((0..m)
        .map(|r| {
            let fitted: f64 = (0..cols).map(|c| design[(r, c)] * coef[c]).sum();
            (fitted - targets[r]).powi(2)
        })
        .sum::<f64>()
        / m as f64)
        .sqrt();
    let mut coefficients = vec![Complex64::new(coef[0], 0.0)];
    coefficients.extend((1..=order).map(|n| Complex64::new(coef[n], coef[order + n])));
    Ok(HarmonicFit { coefficients, transform: DiskTransform::IDENTITY, residual, rank_deficient: rank < cols })
}

/// Smallest order in `1..=max_order` after which one more term improves the
/// residual by less than `rel_tol` (relative), or `max_order`.
pub fn select_order(points: &[Complex64], targets: &[f64], max_order: usize, rel_tol: f64) -> Result<HarmonicFit> {
    let mut best = fit_log_scale(points, targets, 1)?;
    for n in 2..=max_order {
        if points.len() < 2 * n + 1 {
            break;
        }
        let next = fit_log_scale(points, targets, n)?;
        if best.residual - next.residual <= rel_tol * best.residual {
            break;
        }
        best = next;
    }
    Ok(best)
}

/// 32-point Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre_32() -> &'static [(f64, f64)] {
    use std::sync::OnceLock;
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 32;
        let mut out = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// `∫_a^b exp(g(ζ)) dζ` along the segment, by composite Gauss–Legendre with
/// panels no longer than 1/4.
fn integrate_segment(fit: &HarmonicFit, a: Complex64, b: Complex64) -> Complex64 {
    let len = (b - a).norm();
    if len == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let panels = (len / 0.25).ceil().max(1.0) as usize;
    let step = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + step * (p as f64 + 0.5);
        for &(x, w) in gauss_legendre_32() {
            total += w * fit.series(mid + step * (x / 2.0)).exp();
        }
    }
    total * step / 2.0
}

/// `h(w) = ∫_0^w exp(g)` along straight segments from the origin.
pub fn integrate_hprime(fit: &HarmonicFit, points: &[Complex64]) -> Vec<Complex64> {
    points.par_iter().map(|&w| integrate_segment(fit, Complex64::new(0.0, 0.0), w)).collect()
}

/// `h` at the end of a polyline starting at the origin.
pub fn integrate_hprime_path(fit: &HarmonicFit, path: &[Complex64]) -> Complex64 {
    let mut from = Complex64::new(0.0, 0.0);
    let mut total = Complex64::new(0.0, 0.0);
    for &to in path {
        total += integrate_segment(fit, from, to);
        from = to;
    }
    total
}

/// Fit points (disk coordinates of the block-centre images) and log-scale
/// targets for the correction, plus the disk transform of the full image.
fn correction_data(
    f_check: &ComplexGrid,
    phi_check: &Grid,
    field: &DilatationScaleField,
) -> Result<(Vec<Complex64>, Vec<f64>, DiskTransform)> {
    if f_check.lattice() != phi_check.lattice() {
        return Err(Error::Invalid("map and scale grids live on different lattices".into()));
    }
    let mut images = Vec::new();
    let mut log_ratio = Vec::new();
    for k in 0..field.centers.len() {
        if !field.is_available(k) {
            continue;
        }
        let z = field.centers[k];
        let phi_c = phi_check.sample_bilinear_clamped(z);
        if !(phi_c > 0.0) || !(field.phi[k] > 0.0) {
            continue;
        }
        images.push(f_check.sample_bilinear_clamped(z));
        log_ratio.push(field.phi[k].ln() - phi_c.ln());
    }
    if images.is_empty() {
        return Err(Error::Estimation("no usable block scale estimates".into()));
    }
    let (_, transform) = embed_to_disk(f_check.values())?;
    let w = images.iter().map(|&p| transform.forward(p)).collect();
    // |h'| in disk coordinates picks up the factor R of the embedding.
    let targets = log_ratio.iter().map(|t| t + transform.radius.ln()).collect();
    Ok((w, targets, transform))
}

fn apply_correction(
    f_check: &ComplexGrid,
    mut fit: HarmonicFit,
    transform: DiskTransform,
) -> Result<(ComplexGrid, HarmonicFit)> {
    fit.transform = transform;
    let disk: Vec<Complex64> = f_check.values().iter().map(|&p| transform.forward(p)).collect();
    let out = ComplexGrid::new(*f_check.lattice(), integrate_hprime(&fit, &disk))?;
    Ok((out, fit))
}

/// Fits the conformal correction `h` of the given order (reduced if there
/// are too few blocks) from block scale estimates and returns `h ∘ f_check`
/// on the full lattice, together with the fit. The fit lives in disk
/// coordinates `w' = (w - c)/R`.
pub fn compose_estimate(
    f_check: &ComplexGrid,
    phi_check: &Grid,
    field: &DilatationScaleField,
    order: usize,
) -> Result<(ComplexGrid, HarmonicFit)> {
    let (w, targets, transform) = correction_data(f_check, phi_check, field)?;
    let order = order.min(w.len().saturating_sub(1) / 2).max(1);
    apply_correction(f_check, fit_log_scale(&w, &targets, order)?, transform)
}

/// As [`compose_estimate`], with the order chosen by [`select_order`].
pub fn compose_estimate_selected(
    f_check: &ComplexGrid,
    phi_check: &Grid,
    field: &DilatationScaleField,
    max_order: usize,
    rel_tol: f64,
) -> Result<(ComplexGrid, HarmonicFit)> {
    let (w, targets, transform) = correction_data(f_check, phi_check, field)?;
    apply_correction(f_check, select_order(&w, &targets, max_order.max(1), rel_tol)?, transform)
}

/// Rotation and translation (no scaling) minimizing the squared distance of
/// `source` to `target`, applied to `source`.
pub fn procrustes_align(source: &ComplexGrid, target: &ComplexGrid) -> Result<ComplexGrid> {
    if source.lattice() != target.lattice() {
        return Err(Error::Invalid("Procrustes alignment needs matching lattices".into()));
    }
    let n = source.values().len() as f64;
    let ms = source.values().iter().sum::<Complex64>() / n;
    let mt = target.values().iter().sum::<Complex64>() / n;
    let cross: Complex64 = source.values().iter().zip(target.values()).map(|(s, t)| (t - mt) * (s - ms).conj()).sum();
    let rot = if cross.norm() > 0.0 { cross / cross.norm() } else { Complex64::new(1.0, 0.0) };
    Ok(source.map(|s| rot * (s - ms) + mt))
}

/// Interpoint-distance discrepancy between two maps on the same lattice,
/// `sqrt(mean (|a(z)-a(w)| - |b(z)-b(w)|)^2)` over `sample_count` random pairs
/// of distinct sites.
pub fn distance_d1_maps(a: &ComplexGrid, b: &ComplexGrid, sample_count: usize, seed: u64) -> Result<f64> {
    if a.lattice() != b.lattice() {
        return Err(Error::Invalid("d1 needs maps on the same lattice".into()));
    }
    if sample_count < 2 {
        return Err(Error::Invalid("d1 needs at least two sample pairs".into()));
    }
    let n = a.values().len();
    if n < 2 {
        return Err(Error::Invalid("d1 needs at least two sites".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (av, bv) = (a.values(), b.values());
    let mut sum = 0.0;
    for _ in 0..sample_count {
        let pair = sample(&mut rng, n, 2);
        let (i, j) = (pair.index(0), pair.index(1));
        let d = (av[i] - av[j]).norm() - (bv[i] - bv[j]).norm();
        sum += d * d;
    }
    Ok((sum / sample_count as f64).sqrt())
}

/// d1 between an estimated map and a known deformation evaluated on the same
/// lattice.
pub fn distance_d1(f_hat: &ComplexGrid, f_true: &DeformationSpec, sample_count: usize, seed: u64) -> Result<f64> {
    let truth = f_true.evaluate_on(f_hat.lattice())?;
    distance_d1_maps(f_hat, &truth, sample_count, seed)
}

/// RMS of `|mu_a - mu_b|` over sites at least two away from the edge.
pub fn distance_d2_fields(mu_a: &ComplexGrid, mu_b: &ComplexGrid) -> Result<f64> {
    if mu_a.lattice() != mu_b.lattice() {
        return Err(Error::Invalid("d2 needs dilatation fields on the same lattice".into()));
    }
    let l = *mu_a.lattice();
    let (mut sum, mut count) = (0.0, 0usize);
    for (k, (a, b)) in mu_a.values().iter().zip(mu_b.values()).enumerate() {
        let (i, j) = l.coords(k);
        if is_interior(&l, i, j, 2) {
            sum += (a - b).norm_sqr();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Invalid("lattice has no interior sites".into()));
    }
    Ok((sum / count as f64).sqrt())
}

/// d2 between a measured dilatation field and that of a known deformation.
pub fn distance_d2(mu_hat: &ComplexGrid, f_true: &DeformationSpec) -> Result<f64> {
    let (mu_true, _) = numeric_dilatation(&f_true.evaluate_on(mu_hat.lattice())?)?;
    distance_d2_fields(mu_hat, &mu_true)
}
