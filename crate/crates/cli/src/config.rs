//! Pipeline configuration as a flat `key = value` text file.

use std::fmt::Write as _;
use std::path::PathBuf;

use deformfield::covariance::CovarianceModel;
use deformfield::deformation::DeformationSpec;
use deformfield::simulate::SimulationOptions;
use deformfield::Lattice;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Matern,
    PoweredExponential,
    PolynomialPlusFractional,
}

impl Family {
    fn as_str(self) -> &'static str {
        match self {
            Family::Matern => "matern",
            Family::PoweredExponential => "powered-exponential",
            Family::PolynomialPlusFractional => "polynomial-plus-fractional",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Family::Matern, Family::PoweredExponential, Family::PolynomialPlusFractional]
            .into_iter()
            .find(|f| f.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeformationKind {
    Identity,
    Rotational,
    Affine,
}

impl DeformationKind {
    fn as_str(self) -> &'static str {
        match self {
            DeformationKind::Identity => "identity",
            DeformationKind::Rotational => "rotational",
            DeformationKind::Affine => "affine",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [DeformationKind::Identity, DeformationKind::Rotational, DeformationKind::Affine]
            .into_iter()
            .find(|f| f.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub nx: usize,
    pub ny: usize,
    pub block: usize,
    pub family: Family,
    pub variance: f64,
    pub alpha: f64,
    /// Coefficient of the generalized covariance; for Matérn it fixes the
    /// range unless `range` is positive.
    pub c: f64,
    pub range: f64,
    pub quadratic: f64,
    pub deformation: DeformationKind,
    pub radius: f64,
    pub affine_a: Complex64,
    pub affine_b: Complex64,
    pub affine_d: Complex64,
    pub seed: u64,
    pub noise: f64,
    pub alpha_max: f64,
    pub window: usize,
    pub smooth_phi: bool,
    pub flow_steps: usize,
    pub harmonic_n: usize,
    /// Relative residual improvement below which a higher harmonic order is
    /// not worth it; zero keeps `harmonic_n` fixed.
    pub harmonic_plateau: f64,
    pub d1_pairs: usize,
    pub dense_cap: usize,
    pub tile: usize,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            nx: 100,
            ny: 100,
            block: 10,
            family: Family::Matern,
            variance: 0.5151,
            alpha: 0.7,
            c: 1.0,
            range: 0.0,
            quadratic: 0.4034,
            deformation: DeformationKind::Rotational,
            radius: 1.2,
            affine_a: Complex64::new(1.0, 0.0),
            affine_b: Complex64::new(0.0, 0.0),
            affine_d: Complex64::new(0.0, 0.0),
            seed: 1,
            noise: 0.0,
            alpha_max: 4.0,
            window: 4,
            smooth_phi: false,
            flow_steps: 20,
            harmonic_n: 8,
            harmonic_plateau: 0.0,
            d1_pairs: 20_000,
            dense_cap: SimulationOptions::default().dense_cap,
            tile: SimulationOptions::default().tile,
            out: PathBuf::from("out"),
        }
    }
}

fn complex_text(z: Complex64) -> String {
    format!("{},{}", z.re, z.im)
}

fn bad(key: &str, value: &str, want: &str) -> CliError {
    CliError::Config(format!("key `{key}`: cannot parse `{value}` as {want}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, want))
}

fn parse_complex(key: &str, value: &str) -> Result<Complex64> {
    let (re, im) = value.split_once(',').ok_or_else(|| bad(key, value, "`re,im`"))?;
    Ok(Complex64::new(parse_num(key, re.trim(), "a number")?, parse_num(key, im.trim(), "a number")?))
}

impl PipelineConfig {
    /// The desk-scale rotational scenario.
    pub fn desk() -> Self {
        Self::default()
    }

    /// The full-size scenario of the original study.
    pub fn full_scale() -> Self {
        Self { nx: 400, ny: 400, ..Self::default() }
    }

    /// Canonical text form; `parse` of this is the identity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("nx", self.nx.to_string());
        kv("ny", self.ny.to_string());
        kv("block", self.block.to_string());
        kv("family", self.family.as_str().into());
        kv("variance", self.variance.to_string());
        kv("alpha", self.alpha.to_string());
        kv("c", self.c.to_string());
        kv("range", self.range.to_string());
        kv("quadratic", self.quadratic.to_string());
        kv("deformation", self.deformation.as_str().into());
        kv("radius", self.radius.to_string());
        kv("affine_a", complex_text(self.affine_a));
        kv("affine_b", complex_text(self.affine_b));
        kv("affine_d", complex_text(self.affine_d));
        kv("seed", self.seed.to_string());
        kv("noise", self.noise.to_string());
        kv("alpha_max", self.alpha_max.to_string());
        kv("window", self.window.to_string());
        kv("smooth_phi", self.smooth_phi.to_string());
        kv("flow_steps", self.flow_steps.to_string());
        kv("harmonic_n", self.harmonic_n.to_string());
        kv("harmonic_plateau", self.harmonic_plateau.to_string());
        kv("d1_pairs", self.d1_pairs.to_string());
        kv("dense_cap", self.dense_cap.to_string());
        kv("tile", self.tile.to_string());
        kv("out", self.out.display().to_string());
        s
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            c.set(key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        const INT: &str = "a non-negative integer";
        const NUM: &str = "a number";
        match key {
            "nx" => self.nx = parse_num(key, v, INT)?,
            "ny" => self.ny = parse_num(key, v, INT)?,
            "block" => self.block = parse_num(key, v, INT)?,
            "family" => {
                self.family = Family::parse(v)
                    .ok_or_else(|| bad(key, v, "one of matern, powered-exponential, polynomial-plus-fractional"))?
            }
            "variance" => self.variance = parse_num(key, v, NUM)?,
            "alpha" => self.alpha = parse_num(key, v, NUM)?,
            "c" => self.c = parse_num(key, v, NUM)?,
            "range" => self.range = parse_num(key, v, NUM)?,
            "quadratic" => self.quadratic = parse_num(key, v, NUM)?,
            "deformation" => {
                self.deformation =
                    DeformationKind::parse(v).ok_or_else(|| bad(key, v, "one of identity, rotational, affine"))?
            }
            "radius" => self.radius = parse_num(key, v, NUM)?,
            "affine_a" => self.affine_a = parse_complex(key, v)?,
            "affine_b" => self.affine_b = parse_complex(key, v)?,
            "affine_d" => self.affine_d = parse_complex(key, v)?,
            "seed" => self.seed = parse_num(key, v, INT)?,
            "noise" => self.noise = parse_num(key, v, NUM)?,
            "alpha_max" => self.alpha_max = parse_num(key, v, NUM)?,
            "window" => self.window = parse_num(key, v, INT)?,
            "smooth_phi" => self.smooth_phi = parse_num(key, v, "true or false")?,
            "flow_steps" => self.flow_steps = parse_num(key, v, INT)?,
            "harmonic_n" => self.harmonic_n = parse_num(key, v, INT)?,
            "harmonic_plateau" => self.harmonic_plateau = parse_num(key, v, NUM)?,
            "d1_pairs" => self.d1_pairs = parse_num(key, v, INT)?,
            "dense_cap" => self.dense_cap = parse_num(key, v, INT)?,
            "tile" => self.tile = parse_num(key, v, INT)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.nx < 3 || self.ny < 3 {
            return fail(format!("grid {}x{} is smaller than 3x3", self.nx, self.ny));
        }
        if self.block < 3 || self.block > self.nx.min(self.ny) {
            return fail(format!("block {} must lie in [3, {}]", self.block, self.nx.min(self.ny)));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max.is_finite()) || self.alpha > self.alpha_max {
            return fail(format!("alpha {} must not exceed alpha_max {}", self.alpha, self.alpha_max));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return fail(format!("noise {} must lie in [0, 1)", self.noise));
        }
        if self.window == 0 {
            return fail("window must be at least 1".into());
        }
        if self.flow_steps == 0 || self.harmonic_n == 0 || self.d1_pairs < 2 {
            return fail("flow_steps and harmonic_n must be positive and d1_pairs at least 2".into());
        }
        if !(self.harmonic_plateau >= 0.0) {
            return fail(format!("harmonic_plateau {} must be non-negative", self.harmonic_plateau));
        }
        self.model()?;
        self.deformation_spec()?
            .validate(&self.lattice())
            .map_err(|e| CliError::Config(format!("deformation: {e}")))?;
        Ok(())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::unit_square(self.nx, self.ny)
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        let m = match self.family {
            Family::Matern if self.range > 0.0 => CovarianceModel::matern(self.variance, self.range, self.alpha),
            Family::Matern => CovarianceModel::matern_with_expansion(self.variance, self.alpha, self.c),
            Family::PoweredExponential => CovarianceModel::powered_exponential(self.variance, self.range, self.alpha),
            Family::PolynomialPlusFractional => CovarianceModel::polynomial_plus_fractional(
                self.variance,
                self.quadratic,
                self.alpha,
                self.c,
                self.range,
            ),
        };
        m.map_err(|e| CliError::Config(format!("covariance: {e}")))
    }

    pub fn deformation_spec(&self) -> Result<DeformationSpec> {
        Ok(match self.deformation {
            DeformationKind::Identity => DeformationSpec::identity(),
            DeformationKind::Rotational => DeformationSpec::Rotational { radius: self.radius },
            DeformationKind::Affine => DeformationSpec::Affine { a: self.affine_a, b: self.affine_b, d: self.affine_d },
        })
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        SimulationOptions { dense_cap: self.dense_cap, tile: self.tile }
    }

    /// SHA-256 of the canonical text without the output directory, so that
    /// the same experiment written to different places shares a hash.
    /// `to_text` without the output directory, so identical runs written to
    /// different places record identical settings.
    pub fn canonical_text(&self) -> String {
        self.to_text().lines().filter(|l| !l.starts_with("out =")).map(|l| format!("{l}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}
