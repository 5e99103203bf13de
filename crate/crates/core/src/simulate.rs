//! Exact Gaussian simulation of isotropic fields at arbitrary locations, and
//! of deformed fields `Z o f^{-1}` on regular lattices.

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::CovarianceModel;
use crate::deformation::{apply_deformation, DeformationSpec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Lattice};
use crate::linalg::{cholesky_jittered, lower_mul};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    /// Largest point count simulated with a single dense factorization.
    pub dense_cap: usize,
    /// Side of the independent square tiles used above the cap.
    pub tile: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { dense_cap: 20_000, tile: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub model: String,
    pub deformation: String,
    pub seed: u64,
    pub noise_fraction: f64,
}

/// Regular-lattice layout of a sample. `tile` is set when the field was
/// simulated as independent tiles, so only within-tile pairs are dependent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridLayout {
    pub lattice: Lattice,
    pub tile: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleField {
    pub locations: Vec<Complex64>,
    pub values: Vec<f64>,
    pub layout: Option<GridLayout>,
    pub provenance: Provenance,
}

impl SampleField {
    pub fn new(locations: Vec<Complex64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if locations.is_empty() || locations.len() != values.len() {
            return Err(Error::Invalid(format!(
                "sample needs n >= 1 matching locations and values, got {} and {}",
                locations.len(),
                values.len()
            )));
        }
        Ok(Self { locations, values, layout: None, provenance })
    }

    /// A sample whose locations are the sites of `lattice`.
    pub fn on_lattice(lattice: Lattice, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let mut s = Self::new(lattice.points(), values, provenance)?;
        s.layout = Some(GridLayout { lattice, tile: None });
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.layout.as_ref().map(|l| &l.lattice)
    }

    pub fn to_grid(&self) -> Option<Grid> {
        let l = self.lattice()?;
        Grid::new(*l, self.values.clone()).ok()
    }
}

/// A factorized covariance for a fixed set of points; each `draw` costs one
/// triangular product.
pub struct GaussianSampler {
    factor: Mat<f64>,
    n: usize,
}

impl GaussianSampler {
    pub fn new(model: &CovarianceModel, points: &[Complex64]) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Invalid("no points to simulate".into()));
        }
        let (factor, jitter) = cholesky_jittered(n, model.variance(), |mut a| {
            for j in 0..n {
                let zj = points[j];
                for i in j..n {
                    a[(i, j)] = model.eval((points[i] - zj).norm());
                }
            }
        })?;
        if jitter > 1e-12 * model.variance() {
            log::debug!("covariance of {n} points needed jitter {jitter:.2e}");
        }
        Ok(Self { factor, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn draw_with(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(rng)).collect();
        lower_mul(&self.factor, &z)
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        self.draw_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Exact draw of the isotropic field at `locations`. Fails above the dense cap.
pub fn simulate_isotropic(
    model: &CovarianceModel,
    locations: &[Complex64],
    seed: u64,
    options: &SimulationOptions,
) -> Result<SampleField> {
    if locations.len() > options.dense_cap {
        return Err(Error::Simulation(format!(
            "{} points exceed the dense cap of {}; simulate on a lattice to use tiles",
            locations.len(),
            options.dense_cap
        )));
    }
    let values = GaussianSampler::new(model, locations)?.draw(seed);
    let provenance =
        Provenance { model: describe_model(model), deformation: "identity".into(), seed, noise_fraction: 0.0 };
    SampleField::new(locations.to_vec(), values, provenance)
}

/// Simulates `Y = Z o f^{-1}` on a lattice by drawing `Z` exactly at the images
/// `f^{-1}(z)` of the sites. Reusable across seeds.
pub struct GridSampler {
    lattice: Lattice,
    tile: Option<usize>,
    /// Site indices and sampler per tile; a single entry when dense.
    parts: Vec<(Vec<usize>, GaussianSampler)>,
    model: String,
    deformation: String,
}

impl GridSampler {
    pub fn new(
        model: &CovarianceModel,
        lattice: &Lattice,
        deformation: &DeformationSpec,
        options: &SimulationOptions,
    ) -> Result<Self> {
        let images = apply_deformation(deformation, &lattice.points())?;
        let tiled = lattice.len() > options.dense_cap;
        let groups: Vec<Vec<usize>> = if tiled {
            if options.tile < 2 || options.tile * options.tile > options.dense_cap {
                return Err(Error::Invalid(format!("tile side {} unusable", options.tile)));
            }
            tile_indices(lattice, options.tile)
        } else {
            vec![(0..lattice.len()).collect()]
        };
        let mut parts = Vec::with_capacity(groups.len());
        for idx in groups {
            let pts: Vec<Complex64> = idx.iter().map(|&k| images[k]).collect();
            let sampler = GaussianSampler::new(model, &pts)?;
            parts.push((idx, sampler));
        }
        Ok(Self {
            lattice: *lattice,
            tile: tiled.then_some(options.tile),
            parts,
            model: describe_model(model),
            deformation: describe_deformation(deformation),
        })
    }

    pub fn draw(&self, seed: u64) -> SampleField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; self.lattice.len()];
        for (idx, sampler) in &self.parts {
            for (&k, v) in idx.iter().zip(sampler.draw_with(&mut rng)) {
                values[k] = v;
            }
        }
        SampleField {
            locations: self.lattice.points(),
            values,
            layout: Some(GridLayout { lattice: self.lattice, tile: self.tile }),
            provenance: Provenance {
                model: self.model.clone(),
                deformation: self.deformation.clone(),
                seed,
                noise_fraction: 0.0,
            },
        }
    }
}

/// One-shot lattice simulation; see [`GridSampler`].
pub fn simulate_grid(
    model: &CovarianceModel,
    lattice: &Lattice,
    deformation: &DeformationSpec,
    seed: u64,
    options: &SimulationOptions,
) -> Result<SampleField> {
    Ok(GridSampler::new(model, lattice, deformation, options)?.draw(seed))
}

fn tile_indices(l: &Lattice, tile: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for tj in (0..l.ny).step_by(tile) {
        for ti in (0..l.nx).step_by(tile) {
            let mut idx = Vec::new();
            for j in tj..(tj + tile).min(l.ny) {
                for i in ti..(ti + tile).min(l.nx) {
                    idx.push(l.index(i, j));
                }
            }
            out.push(idx);
        }
    }
    out
}

pub fn describe_model(m: &CovarianceModel) -> String {
    format!("{} variance={} range={} alpha={}", m.family().name(), m.variance(), m.range(), m.alpha())
}

pub fn describe_deformation(d: &DeformationSpec) -> String {
    match d {
        DeformationSpec::Rotational { radius } => format!("rotational radius={radius}"),
        DeformationSpec::Affine { a, b, d } => format!("affine a={a} b={b} d={d}"),
        other => other.kind().to_string(),
    }
}

/// Adds i.i.d. centred Gaussian noise with standard deviation
/// `fraction * sd(values)`.
pub fn add_noise(field: &SampleField, fraction: f64, seed: u64) -> Result<SampleField> {
    if !(fraction >= 0.0) || !fraction.is_finite() {
        return Err(Error::Invalid(format!("noise fraction must be >= 0, got {fraction}")));
    }
    let mut out = field.clone();
    out.provenance.noise_fraction = fraction;
    if fraction == 0.0 {
        return Ok(out);
    }
    let sd = fraction * sample_sd(&field.values);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut out.values {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += sd * e;
    }
    Ok(out)
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Axis-aligned empirical semivariogram at lags `1..=max_lag` sites, from
/// pairs within the same simulation tile. Returns `(distance, gamma)` pairs,
/// x-direction then y-direction.
pub fn empirical_variogram(field: &SampleField, max_lag: usize) -> Result<Vec<(f64, f64)>> {
    let layout = field.layout.ok_or_else(|| Error::Invalid("variogram needs a lattice sample".into()))?;
    let l = layout.lattice;
    let tile = layout.tile.unwrap_or(usize::MAX);
    let same_tile = |a: usize, b: usize| a / tile == b / tile;
    let y = &field.values;
    let mut out = Vec::new();
    for (step, h) in [((1usize, 0usize), l.dx), ((0, 1), l.dy)] {
        for k in 1..=max_lag {
            let (mut s, mut c) = (0.0, 0usize);
            for j in 0..l.ny {
                for i in 0..l.nx {
                    let (i2, j2) = (i + k * step.0, j + k * step.1);
                    if i2 >= l.nx || j2 >= l.ny || !same_tile(i, i2) || !same_tile(j, j2) {
                        continue;
                    }
                    let d = y[l.index(i2, j2)] - y[l.index(i, j)];
                    s += d * d;
                    c += 1;
                }
            }
            if c > 0 {
                out.push((k as f64 * h, 0.5 * s / c as f64));
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `log gamma` against `log distance`.
pub fn variogram_slope(field: &SampleField, max_lag: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = empirical_variogram(field, max_lag)?
        .into_iter()
        .filter(|&(_, g)| g > 0.0)
        .map(|(h, g)| (h.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Estimation("too few variogram lags for a slope".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
