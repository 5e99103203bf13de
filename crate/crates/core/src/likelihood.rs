//! Approximate restricted likelihood for the fractional index and for the
//! local dilatation/scale of each neighbourhood.
//!
//! Sign convention: a block is modelled as `Z(A(z + mu conj(z)))`, so the
//! reported `mu` estimates the dilatation of `f^{-1}`. In terms of
//! [`aniso_g`], whose argument is `z - mu conj(z)`, this is the parameter
//! `-mu`.

use std::io::{BufRead, Write};

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::covariance::GeneralizedCovariance;
use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::increments::{increment_matrix, ContrastMatrix};
use crate::linalg::logdet_and_quadratic;
use crate::optimize::{golden_section, nelder_mead, NelderMeadOptions};
use crate::simulate::SampleField;

/// Smallest fractional index considered by the search.
pub const ALPHA_FLOOR: f64 = 0.05;
/// Largest admissible `|mu|`.
pub const MU_MAX: f64 = 1.0 - 1e-6;
/// Estimates with `|mu|` at or above this have run onto the edge of the disk:
/// the likelihood has no interior optimum and the block is treated as failed.
pub const MU_BOUNDARY: f64 = 1.0 - 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodPartition {
    pub lattice: Lattice,
    pub block: usize,
    /// Blocks per row and per column.
    pub bx: usize,
    pub by: usize,
    /// Site indices of each block, blocks ordered row-major.
    pub blocks: Vec<Vec<usize>>,
    pub centers: Vec<Complex64>,
    /// Sites in trailing rows/columns not covered by any block.
    pub dropped: usize,
}

/// Square `block x block` neighbourhoods tiling the lattice from its origin.
pub fn partition_grid(lattice: &Lattice, block: usize) -> Result<NeighborhoodPartition> {
    if block < 3 {
        return Err(Error::Invalid(format!("block size must be >= 3, got {block}")));
    }
    if block > lattice.nx || block > lattice.ny {
        return Err(Error::Invalid(format!("block size {block} exceeds lattice {}x{}", lattice.nx, lattice.ny)));
    }
    let (bx, by) = (lattice.nx / block, lattice.ny / block);
    let mut blocks = Vec::with_capacity(bx * by);
    let mut centers = Vec::with_capacity(bx * by);
    for bj in 0..by {
        for bi in 0..bx {
            let mut idx = Vec::with_capacity(block * block);
            let mut c = Complex64::new(0.0, 0.0);
            for j in bj * block..(bj + 1) * block {
                for i in bi * block..(bi + 1) * block {
                    idx.push(lattice.index(i, j));
                    c += lattice.point(i, j);
                }
            }
            centers.push(c / idx.len() as f64);
            blocks.push(idx);
        }
    }
    let dropped = lattice.len() - bx * by * block * block;
    if dropped > 0 {
        log::warn!(
            "partition drops {dropped} sites in trailing rows/columns ({}x{} lattice, block {block})",
            lattice.nx,
            lattice.ny
        );
    }
    Ok(NeighborhoodPartition { lattice: *lattice, block, bx, by, blocks, centers, dropped })
}

/// Contrasts and pairwise offsets of one block, reused across likelihood
/// evaluations.
pub struct BlockProblem {
    contrast: ContrastMatrix,
    ytilde: Vec<f64>,
    offsets: Vec<Complex64>,
    /// Data carry no information once polynomials are removed.
    degenerate: bool,
}

impl BlockProblem {
    pub fn new(block: &[usize], data: &SampleField, degree: usize) -> Result<Self> {
        let locations: Vec<Complex64> = block.iter().map(|&k| data.locations[k]).collect();
        let contrast = increment_matrix(&locations, degree)?;
        Ok(Self::with_contrast(block, data, contrast))
    }

    pub fn with_contrast(block: &[usize], data: &SampleField, contrast: ContrastMatrix) -> Self {
        let values: Vec<f64> = block.iter().map(|&k| data.values[k]).collect();
        let ytilde = contrast.apply(&values);
        let ynorm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tnorm = ytilde.iter().map(|v| v * v).sum::<f64>().sqrt();
        let degenerate = !(tnorm > 1e-12 * ynorm) || !tnorm.is_finite();
        let locs = contrast.locations();
        let m = locs.len();
        let mut offsets = Vec::with_capacity(m * (m - 1) / 2);
        for q in 0..m {
            for p in q + 1..m {
                offsets.push(locs[p] - locs[q]);
            }
        }
        Self { contrast, ytilde, offsets, degenerate }
    }

    pub fn n_contrasts(&self) -> usize {
        self.contrast.n_rows()
    }

    fn gram(&self, mut entry: impl FnMut(Complex64) -> f64) -> Mat<f64> {
        let m = self.contrast.locations().len();
        let mut g = Mat::<f64>::zeros(m, m);
        let mut k = 0;
        for q in 0..m {
            for p in q + 1..m {
                let v = entry(self.offsets[k]);
                g[(p, q)] = v;
                g[(q, p)] = v;
                k += 1;
            }
        }
        g
    }

    /// `(log det Sigma, Y~' Sigma^{-1} Y~)` for the generalized covariance
    /// evaluated through `distance`.
    fn evaluate(&self, gc: &GeneralizedCovariance, distance: impl Fn(Complex64) -> f64) -> Option<(f64, f64)> {
        let g = self.gram(|d| gc.eval(distance(d)));
        let sigma = self.contrast.congruence(&g);
        logdet_and_quadratic(&sigma, &self.ytilde)
    }

    /// `1/2 log|Sigma_alpha| + 1/2 Y~' Sigma_alpha^{-1} Y~`, or `+inf` when
    /// `Sigma_alpha` cannot be factorized.
    pub fn neg_loglik_alpha(&self, alpha: f64) -> f64 {
        let Ok(gc) = GeneralizedCovariance::new(alpha) else {
            return f64::INFINITY;
        };
        match self.evaluate(&gc, |d| d.norm()) {
            Some((logdet, quad)) => 0.5 * (logdet + quad),
            None => {
                log::warn!("increment covariance not positive definite at alpha = {alpha}");
                f64::INFINITY
            }
        }
    }

    /// Negative log-likelihood at dilatation `mu`, with the scale profiled
    /// out. `Sigma_theta = |A|^alpha Sigma_mu`, so for fixed `mu` the optimal
    /// `s = |A|^alpha` is `q / m'`; it is clamped to the `phi` box. Returns
    /// `(nll, phi)`.
    pub fn profile_neg_loglik(
        &self,
        gc: &GeneralizedCovariance,
        mu: Complex64,
        phi_box: (f64, f64),
    ) -> Option<(f64, f64)> {
        if self.degenerate {
            return None;
        }
        let (logdet, q) = self.evaluate(gc, |d| (d + mu * d.conj()).norm())?;
        if !(q > 0.0) {
            return None;
        }
        let alpha = gc.alpha();
        let m = self.n_contrasts() as f64;
        let shrink = (1.0 - mu.norm_sqr()).sqrt();
        let phi = ((q / m).powf(1.0 / alpha) * shrink).clamp(phi_box.0, phi_box.1);
        let s = (phi / shrink).powf(alpha);
        Some((0.5 * (logdet + m * s.ln() + q / s), phi))
    }
}

/// Likelihood of `alpha` for one block; see [`BlockProblem::neg_loglik_alpha`].
pub fn neg_loglik_alpha(alpha: f64, block: &[usize], data: &SampleField, contrast: &ContrastMatrix) -> f64 {
    BlockProblem::with_contrast(block, data, contrast.clone()).neg_loglik_alpha(alpha)
}

/// Contrast degree used for a prior bound `alpha_max`.
pub fn contrast_degree(alpha_max: f64) -> usize {
    (alpha_max / 2.0).floor() as usize
}

fn block_problems(data: &SampleField, partition: &NeighborhoodPartition, degree: usize) -> Result<Vec<BlockProblem>> {
    partition.blocks.par_iter().map(|b| BlockProblem::new(b, data, degree)).collect()
}

/// Maximizes the summed block likelihood over `alpha in [0.05, alpha_max]` by
/// golden-section search to absolute tolerance `tol`.
pub fn estimate_alpha(data: &SampleField, partition: &NeighborhoodPartition, alpha_max: f64, tol: f64) -> Result<f64> {
    if !(alpha_max > ALPHA_FLOOR) || !(tol > 0.0) {
        return Err(Error::Invalid(format!("need alpha_max > {ALPHA_FLOOR} and tol > 0")));
    }
    let problems = block_problems(data, partition, contrast_degree(alpha_max))?;
    let total = |alpha: f64| -> f64 {
        let parts: Vec<f64> = problems.par_iter().map(|p| p.neg_loglik_alpha(alpha)).collect();
        parts.iter().sum()
    };
    let (alpha, value) = golden_section(total, ALPHA_FLOOR, alpha_max, tol);
    if !value.is_finite() {
        return Err(Error::Estimation("likelihood infeasible for every alpha tried".into()));
    }
    Ok(alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnisotropyParams {
    pub mu: Complex64,
    pub phi: f64,
}

impl AnisotropyParams {
    /// `|A| = phi / sqrt(1 - |mu|^2)`.
    pub fn stretch(&self) -> f64 {
        self.phi / (1.0 - self.mu.norm_sqr()).sqrt()
    }
}

/// `G_alpha(|A| |z - mu conj(z)|)`.
pub fn aniso_g(theta: &AnisotropyParams, alpha: f64, z: Complex64) -> Result<f64> {
    if !(theta.mu.norm() < 1.0) {
        return Err(Error::Domain(format!("|mu| = {} is not < 1", theta.mu.norm())));
    }
    let gc = GeneralizedCovariance::new(alpha)?;
    Ok(gc.eval(theta.stretch() * (z - theta.mu * z.conj()).norm()))
}

#[derive(Clone, Copy, Debug)]
pub struct ThetaOptions {
    pub phi_min: f64,
    pub phi_max: f64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self {
            phi_min: 1e-3,
            phi_max: 1e3,
            nelder_mead: NelderMeadOptions { max_evals: 300, f_tol: 1e-8, x_tol: 1e-5, initial_step: 0.25 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaEstimate {
    pub params: AnisotropyParams,
    pub neg_loglik: f64,
}

/// Maps unconstrained `(t1, t2)` to `mu = tanh(r) e^{i w}` with `(r, w)` the
/// polar form of `(t1, t2)`.
pub fn mu_from_unconstrained(t: &[f64]) -> Complex64 {
    let r = t[0].hypot(t[1]);
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let modulus = r.tanh().min(MU_MAX);
    Complex64::new(t[0], t[1]) * (modulus / r)
}

/// Starting dilatations of the multistart.
pub const THETA_STARTS: [(f64, f64); 5] = [(0.0, 0.0), (0.3, 0.0), (-0.3, 0.0), (0.0, 0.3), (0.0, -0.3)];

/// Best local optimum of the block likelihood over `(mu, phi)`; `None` when
/// every start is infeasible or the optimum lies on the edge of the disk.
pub fn estimate_block_theta(problem: &BlockProblem, alpha_hat: f64, opts: &ThetaOptions) -> Option<ThetaEstimate> {
    let gc = GeneralizedCovariance::new(alpha_hat).ok()?;
    let phi_box = (opts.phi_min, opts.phi_max);
    let objective = |t: &[f64]| {
        problem.profile_neg_loglik(&gc, mu_from_unconstrained(t), phi_box).map_or(f64::INFINITY, |(v, _)| v)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &(re, im) in &THETA_STARTS {
        let m = Complex64::new(re, im);
        let t0 = if m.norm() > 0.0 {
            let scale = m.norm().atanh() / m.norm();
            vec![re * scale, im * scale]
        } else {
            vec![0.0, 0.0]
        };
        let res = nelder_mead(objective, &t0, &opts.nelder_mead);
        if res.f.is_finite() && best.as_ref().is_none_or(|b| res.f < b.1) {
            best = Some((res.x, res.f));
        }
    }
    let (t, _) = best?;
    let mu = mu_from_unconstrained(&t);
    if mu.norm() >= MU_BOUNDARY {
        return None;
    }
    let (nll, phi) = problem.profile_neg_loglik(&gc, mu, phi_box)?;
    Some(ThetaEstimate { params: AnisotropyParams { mu, phi }, neg_loglik: nll })
}

/// [`estimate_block_theta`] for one block of `data`, with contrasts `contrast`.
pub fn estimate_theta(
    block: &[usize],
    data: &SampleField,
    alpha_hat: f64,
    contrast: &ContrastMatrix,
    opts: &ThetaOptions,
) -> Option<ThetaEstimate> {
    let problem = BlockProblem::with_contrast(block, data, contrast.clone());
    estimate_block_theta(&problem, alpha_hat, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockStatus {
    Ok,
    Missing,
    /// Filled in from neighbours during smoothing.
    Imputed,
}

impl BlockStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Missing => "missing",
            Self::Imputed => "imputed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(Self::Ok),
            "missing" => Some(Self::Missing),
            "imputed" => Some(Self::Imputed),
            _ => None,
        }
    }
}

/// Per-block estimates on the `bx x by` lattice of block centres.
#[derive(Clone, Debug, PartialEq)]
pub struct DilatationScaleField {
    pub bx: usize,
    pub by: usize,
    pub centers: Vec<Complex64>,
    pub mu: Vec<Complex64>,
    pub phi: Vec<f64>,
    pub loglik: Vec<f64>,
    pub status: Vec<BlockStatus>,
    pub alpha_used: f64,
}

impl DilatationScaleField {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.bx + i
    }

    pub fn is_available(&self, k: usize) -> bool {
        self.status[k] != BlockStatus::Missing
    }

    /// A field holding the same `(mu, phi)` at every centre.
    pub fn constant(bx: usize, by: usize, centers: Vec<Complex64>, mu: Complex64, phi: f64) -> Self {
        let n = centers.len();
        assert_eq!(n, bx * by, "centre count must match block lattice");
        Self {
            bx,
            by,
            centers,
            mu: vec![mu; n],
            phi: vec![phi; n],
            loglik: vec![0.0; n],
            status: vec![BlockStatus::Ok; n],
            alpha_used: f64::NAN,
        }
    }

    /// CSV with header `cx,cy,mu_re,mu_im,phi,loglik,status`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cx,cy,mu_re,mu_im,phi,loglik,status")?;
        for k in 0..self.len() {
            let c = self.centers[k];
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.re,
                c.im,
                self.mu[k].re,
                self.mu[k].im,
                self.phi[k],
                self.loglik[k],
                self.status[k].as_str()
            )?;
        }
        Ok(())
    }

    /// Reads [`write_csv`](Self::write_csv) output. Rows must be row-major
    /// over the block lattice; its width is the length of the first run of
    /// equal `cy`.
    pub fn read_csv<R: BufRead>(r: R, alpha_used: f64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty dilatation CSV".into()))??;
        if header.trim() != "cx,cy,mu_re,mu_im,phi,loglik,status" {
            return Err(Error::Format(format!("unexpected dilatation CSV header '{header}'")));
        }
        let (mut centers, mut mu, mut phi, mut loglik, mut status) = (vec![], vec![], vec![], vec![], vec![]);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Format(format!("dilatation CSV line {}: '{line}'", n + 2));
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            centers.push(Complex64::new(num(f[0])?, num(f[1])?));
            mu.push(Complex64::new(num(f[2])?, num(f[3])?));
            phi.push(num(f[4])?);
            loglik.push(num(f[5])?);
            status.push(BlockStatus::parse(f[6]).ok_or_else(bad)?);
        }
        if centers.is_empty() {
            return Err(Error::Format("dilatation CSV has no rows".into()));
        }
        let bx = centers.iter().take_while(|c| c.im == centers[0].im).count();
        if centers.len() % bx != 0 {
            return Err(Error::Format(format!("{} rows do not form a block lattice of width {bx}", centers.len())));
        }
        let by = centers.len() / bx;
        Ok(Self { bx, by, centers, mu, phi, loglik, status, alpha_used })
    }
}

/// Per-block `(mu, phi)` estimates, evaluated concurrently and merged in
/// block order.
pub fn estimate_field(
    data: &SampleField,
    partition: &NeighborhoodPartition,
    alpha_hat: f64,
    alpha_max: f64,
    opts: &ThetaOptions,
) -> Result<DilatationScaleField> {
    let degree = contrast_degree(alpha_max);
    let results: Vec<Option<ThetaEstimate>> = partition
        .blocks
        .par_iter()
        .map(|b| {
            let problem = BlockProblem::new(b, data, degree)?;
            Ok(estimate_block_theta(&problem, alpha_hat, opts))
        })
        .collect::<Result<_>>()?;
    let n = results.len();
    let mut field = DilatationScaleField {
        bx: partition.bx,
        by: partition.by,
        centers: partition.centers.clone(),
        mu: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        loglik: Vec::with_capacity(n),
        status: Vec::with_capacity(n),
        alpha_used: alpha_hat,
    };
    for r in results {
        match r {
            Some(est) => {
                field.mu.push(est.params.mu);
                field.phi.push(est.params.phi);
                field.loglik.push(-est.neg_loglik);
                field.status.push(BlockStatus::Ok);
            }
            None => {
                field.mu.push(Complex64::new(f64::NAN, f64::NAN));
                field.phi.push(f64::NAN);
                field.loglik.push(f64::NAN);
                field.status.push(BlockStatus::Missing);
            }
        }
    }
    let missing = field.status.iter().filter(|s| **s == BlockStatus::Missing).count();
    if missing > 0 {
        log::warn!("{missing} of {n} blocks failed to estimate and are marked missing");
    }
    Ok(field)
}
