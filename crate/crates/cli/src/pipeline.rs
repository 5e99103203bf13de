//! The estimation stages, in memory and as file-to-file commands.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use deformfield::conformal::{
    compose_estimate, compose_estimate_selected, distance_d1, distance_d2, procrustes_align, HarmonicFit,
};
use deformfield::dilatation::numeric_dilatation;
use deformfield::disk::{interpolate_onto, smooth_dilatation};
use deformfield::flow::{reconstruct_map, write_diagnostics_csv, FlowOptions, Reconstruction};
use deformfield::likelihood::{estimate_alpha, estimate_field, partition_grid, DilatationScaleField, ThetaOptions};
use deformfield::simulate::{add_noise, describe_deformation, describe_model, GridSampler, SampleField};
use deformfield::{ComplexGrid, Grid};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::persist::{check_hash, read_grid, read_sidecar, write_grid, write_text, Sidecar};
use crate::svg;

pub const FIELD: &str = "field.grd";
pub const DILATATION: &str = "dilatation.csv";
pub const SMOOTHED: &str = "smoothed.csv";
pub const MU_STAR: &str = "mu_star.grd";
pub const F_CHECK: &str = "f_check.grd";
pub const PHI_CHECK: &str = "phi_check.grd";
pub const FLOW_LOG: &str = "flow_log.csv";
pub const F_HAT: &str = "f_hat.grd";
pub const HARMONIC: &str = "harmonic.json";
pub const REPORT: &str = "report.csv";
pub const ISOTROPIC: &str = "isotropic.csv";
pub const NOISE_TABLE: &str = "noise_study.csv";

/// Seed of the measurement noise, kept apart from the field seed so that the
/// same field can be reused across noise levels.
pub fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

fn sidecar(config: &PipelineConfig, kind: &str, details: serde_json::Value) -> Sidecar {
    Sidecar { config_hash: config.hash(), kind: kind.into(), details }
}

pub fn build_sampler(config: &PipelineConfig) -> Result<GridSampler> {
    Ok(GridSampler::new(
        &config.model()?,
        &config.lattice(),
        &config.deformation_spec()?,
        &config.simulation_options(),
    )?)
}

/// Draws the field for `seed` and adds noise with standard deviation `noise`
/// times the field's sample standard deviation.
pub fn draw(sampler: &GridSampler, seed: u64, noise: f64) -> Result<SampleField> {
    let field = sampler.draw(seed);
    if noise > 0.0 {
        Ok(add_noise(&field, noise, noise_seed(seed))?)
    } else {
        Ok(field)
    }
}

#[derive(Clone, Debug)]
pub struct Estimates {
    pub alpha_hat: f64,
    pub field: DilatationScaleField,
}

pub fn estimate(config: &PipelineConfig, data: &SampleField) -> Result<Estimates> {
    let lattice =
        data.lattice().copied().ok_or_else(|| CliError::Config("estimation needs a field on a lattice".into()))?;
    let partition = partition_grid(&lattice, config.block)?;
    let alpha_hat = estimate_alpha(data, &partition, config.alpha_max, 1e-3)?;
    log::info!("alpha estimate {alpha_hat:.4}");
    let field = estimate_field(data, &partition, alpha_hat, config.alpha_max, &ThetaOptions::default())?;
    Ok(Estimates { alpha_hat, field })
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub smoothed: DilatationScaleField,
    pub mu_star: ComplexGrid,
    pub extrapolated: usize,
    pub reconstruction: Reconstruction,
    pub f_hat: ComplexGrid,
    pub fit: HarmonicFit,
}

/// Smoothing, flow reconstruction and conformal correction.
pub fn recover(config: &PipelineConfig, field: &DilatationScaleField) -> Result<Recovery> {
    let smoothed = smooth_dilatation(field, config.window, config.smooth_phi)?;
    let (mu_star, extrapolated) = interpolate_onto(&smoothed, &config.lattice())?;
    let opts = FlowOptions { steps: config.flow_steps, ..Default::default() };
    let reconstruction = reconstruct_map(&mu_star, &opts)?;
    let (f_hat, fit) = if config.harmonic_plateau > 0.0 {
        compose_estimate_selected(
            &reconstruction.map,
            &reconstruction.phi,
            &smoothed,
            config.harmonic_n,
            config.harmonic_plateau,
        )?
    } else {
        compose_estimate(&reconstruction.map, &reconstruction.phi, &smoothed, config.harmonic_n)?
    };
    log::info!("harmonic order {} residual {:.4}", fit.order(), fit.residual);
    Ok(Recovery { smoothed, mu_star, extrapolated, reconstruction, f_hat, fit })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub d1: f64,
    pub d2: f64,
}

/// Distances of an estimated map to the configured true deformation.
pub fn evaluate(config: &PipelineConfig, f_hat: &ComplexGrid) -> Result<Evaluation> {
    let spec = config.deformation_spec()?;
    let d1 = distance_d1(f_hat, &spec, config.d1_pairs, config.seed)?;
    let (mu_hat, _) = numeric_dilatation(f_hat)?;
    let d2 = distance_d2(&mu_hat, &spec)?;
    Ok(Evaluation { d1, d2 })
}

fn path(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out.join(name)
}

pub fn cmd_simulate(config: &PipelineConfig) -> Result<PathBuf> {
    let sampler = build_sampler(config)?;
    let data = draw(&sampler, config.seed, config.noise)?;
    let grid = data.to_grid().expect("sampler output lies on a lattice");
    let out = path(config, FIELD);
    let details = json!({
        "seed": config.seed,
        "model": describe_model(&config.model()?),
        "deformation": describe_deformation(&config.deformation_spec()?),
        "noise_fraction": config.noise,
        "tile": data.layout.as_ref().and_then(|l| l.tile),
    });
    write_grid(&out, &grid, &sidecar(config, "field", details))?;
    write_text(&path(config, "config.txt"), &config.canonical_text(), None)?;
    Ok(out)
}

fn read_field(file: &Path) -> Result<SampleField> {
    let grid: Grid = read_grid(file)?;
    let side = read_sidecar(file).ok();
    let seed = side.as_ref().and_then(|s| s.details["seed"].as_u64()).unwrap_or(0);
    let noise = side.as_ref().and_then(|s| s.details["noise_fraction"].as_f64()).unwrap_or(0.0);
    let provenance = deformfield::simulate::Provenance {
        model: side.as_ref().and_then(|s| s.details["model"].as_str().map(String::from)).unwrap_or_default(),
        deformation: side
            .as_ref()
            .and_then(|s| s.details["deformation"].as_str().map(String::from))
            .unwrap_or_default(),
        seed,
        noise_fraction: noise,
    };
    let tile = side.as_ref().and_then(|s| s.details["tile"].as_u64()).map(|t| t as usize);
    let lattice = *grid.lattice();
    let mut field = SampleField::on_lattice(lattice, grid.into_values(), provenance)?;
    field.layout = Some(deformfield::simulate::GridLayout { lattice, tile });
    Ok(field)
}

fn field_csv(field: &DilatationScaleField) -> Result<String> {
    let mut buf = Vec::new();
    field.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_estimate(config: &PipelineConfig, field_file: &Path, force: bool) -> Result<PathBuf> {
    if !field_file.exists() {
        return Err(CliError::io(field_file, "no such file"));
    }
    if read_sidecar(field_file).is_ok() {
        check_hash(field_file, &config.hash(), force)?;
    }
    let data = read_field(field_file)?;
    let est = estimate(config, &data)?;
    let out = path(config, DILATATION);
    let details = json!({ "alpha_hat": est.alpha_hat, "block": config.block, "bx": est.field.bx, "by": est.field.by });
    write_text(&out, &field_csv(&est.field)?, Some(&sidecar(config, "dilatation", details)))?;
    write_text(&path(config, "dilatation.svg"), &svg::ellipse_glyphs(&est.field, "estimated dilatation"), None)?;
    Ok(out)
}

fn read_dilatation(file: &Path) -> Result<DilatationScaleField> {
    let alpha = read_sidecar(file).ok().and_then(|s| s.details["alpha_hat"].as_f64()).unwrap_or(f64::NAN);
    let f = fs::File::open(file).map_err(|e| CliError::io(file, e))?;
    DilatationScaleField::read_csv(BufReader::new(f), alpha).map_err(|e| CliError::io(file, e))
}

pub fn write_recovery(config: &PipelineConfig, rec: &Recovery) -> Result<()> {
    let side = |kind: &str| sidecar(config, kind, json!({}));
    write_text(&path(config, SMOOTHED), &field_csv(&rec.smoothed)?, Some(&side("smoothed-dilatation")))?;
    write_grid(&path(config, MU_STAR), &rec.mu_star, &side("target-dilatation"))?;
    write_grid(&path(config, F_CHECK), &rec.reconstruction.map, &side("flow-map"))?;
    write_grid(&path(config, PHI_CHECK), &rec.reconstruction.phi, &side("flow-scale"))?;
    let mut log = Vec::new();
    write_diagnostics_csv(&rec.reconstruction.log, &mut log)?;
    write_text(&path(config, FLOW_LOG), &String::from_utf8_lossy(&log), Some(&side("flow-log")))?;
    write_grid(&path(config, F_HAT), &rec.f_hat, &side("estimated-map"))?;
    let coeffs: Vec<[f64; 2]> = rec.fit.coefficients.iter().map(|c| [c.re, c.im]).collect();
    let harmonic = json!({
        "config_hash": config.hash(),
        "order": rec.fit.order(),
        "coefficients": coeffs,
        "center": [rec.fit.transform.center.re, rec.fit.transform.center.im],
        "radius": rec.fit.transform.radius,
        "residual": rec.fit.residual,
        "rank_deficient": rec.fit.rank_deficient,
        "extrapolated_sites": rec.extrapolated,
    });
    let text = serde_json::to_string_pretty(&harmonic).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write_text(&path(config, HARMONIC), &text, None)?;
    write_text(&path(config, "smoothed.svg"), &svg::ellipse_glyphs(&rec.smoothed, "smoothed dilatation"), None)?;
    let stride = (config.nx.max(config.ny) / 20).max(1);
    write_text(
        &path(config, "f_check.svg"),
        &svg::warped_grid(&rec.reconstruction.map, stride, "flow reconstruction"),
        None,
    )?;
    write_text(&path(config, "f_hat.svg"), &svg::warped_grid(&rec.f_hat, stride, "estimated deformation"), None)?;
    let log_scale = rec.reconstruction.phi.map(|p| p.ln());
    write_text(&path(config, "log_phi_check.svg"), &svg::heatmap(&log_scale, "log scale of the flow map"), None)?;
    let fitted = Grid::from_fn(*rec.f_hat.lattice(), |z| {
        let w = rec.fit.transform.forward(rec.reconstruction.map.sample_bilinear_clamped(z));
        rec.fit.log_scale(w) - rec.fit.transform.radius.ln()
    });
    write_text(&path(config, "log_h_prime.svg"), &svg::heatmap(&fitted, "fitted log scale correction"), None)?;
    Ok(())
}

pub fn cmd_reconstruct(config: &PipelineConfig, csv: &Path, force: bool) -> Result<PathBuf> {
    if !csv.exists() {
        return Err(CliError::io(csv, "no such file"));
    }
    if read_sidecar(csv).is_ok() {
        check_hash(csv, &config.hash(), force)?;
    }
    let field = read_dilatation(csv)?;
    if field.is_empty() {
        return Err(CliError::io(csv, "no blocks"));
    }
    let rec = recover(config, &field)?;
    write_recovery(config, &rec)?;
    Ok(path(config, F_HAT))
}

pub fn report_csv(config: &PipelineConfig, eval: &Evaluation) -> String {
    let hash = config.hash();
    let mut s = String::from("metric,value,config_hash\n");
    let _ = writeln!(s, "noise,{},{hash}", config.noise);
    let _ = writeln!(s, "d1,{},{hash}", eval.d1);
    let _ = writeln!(s, "d2,{},{hash}", eval.d2);
    s
}

pub fn cmd_evaluate(config: &PipelineConfig, f_hat_file: &Path, force: bool) -> Result<PathBuf> {
    check_hash(f_hat_file, &config.hash(), force)?;
    let f_hat: ComplexGrid = read_grid(f_hat_file)?;
    if f_hat.lattice() != &config.lattice() {
        return Err(CliError::Config(format!(
            "{} is not on the configured {}x{} lattice",
            f_hat_file.display(),
            config.nx,
            config.ny
        )));
    }
    let eval = evaluate(config, &f_hat)?;
    let out = path(config, REPORT);
    write_text(&out, &report_csv(config, &eval), None)?;
    let truth = config.deformation_spec()?.evaluate_on(f_hat.lattice())?;
    let aligned = procrustes_align(&f_hat, &truth)?;
    write_grid(&path(config, "f_hat_aligned.grd"), &aligned, &sidecar(config, "aligned-map", json!({})))?;
    // Observations at their estimated isotropic coordinates.
    let field_file = path(config, FIELD);
    if field_file.exists() {
        let data: Grid = read_grid(&field_file)?;
        if data.lattice() == f_hat.lattice() {
            let mut s = String::from("u,v,value\n");
            for (w, y) in aligned.values().iter().zip(data.values()) {
                let _ = writeln!(s, "{},{},{}", w.re, w.im, y);
            }
            write_text(&path(config, ISOTROPIC), &s, Some(&sidecar(config, "isotropic-field", json!({}))))?;
            write_text(
                &path(config, "isotropic.svg"),
                &svg::scatter(aligned.values(), data.values(), "field at estimated isotropic coordinates"),
                None,
            )?;
        }
    }
    Ok(out)
}

/// All stages in sequence, writing every artifact.
pub fn cmd_pipeline(config: &PipelineConfig) -> Result<Evaluation> {
    let field = cmd_simulate(config)?;
    let csv = cmd_estimate(config, &field, false)?;
    let f_hat = cmd_reconstruct(config, &csv, false)?;
    let report = cmd_evaluate(config, &f_hat, false)?;
    let text = fs::read_to_string(&report).map_err(|e| CliError::io(&report, e))?;
    let value = |m: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{m},")))
            .and_then(|r| r.split(',').next())
            .and_then(|v| v.parse().ok())
            .unwrap_or(f64::NAN)
    };
    Ok(Evaluation { d1: value("d1"), d2: value("d2") })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRow {
    pub noise: f64,
    pub replicate: u64,
    pub alpha_hat: f64,
    pub eval: Evaluation,
}

/// Runs the in-memory pipeline for each replicate seed and noise level. One
/// sampler serves every run; each replicate's field and noise pattern are
/// shared across noise levels so that only the noise amplitude varies.
pub fn noise_study(config: &PipelineConfig, levels: &[f64], replicates: u64) -> Result<Vec<NoiseRow>> {
    noise_study_with(config, &build_sampler(config)?, levels, replicates)
}

/// As [`noise_study`], with a sampler already built for `config`.
pub fn noise_study_with(
    config: &PipelineConfig,
    sampler: &GridSampler,
    levels: &[f64],
    replicates: u64,
) -> Result<Vec<NoiseRow>> {
    let mut rows = Vec::new();
    for r in 0..replicates.max(1) {
        let seed = config.seed + r;
        for &noise in levels {
            let data = draw(sampler, seed, noise)?;
            let est = estimate(config, &data)?;
            let rec = recover(config, &est.field)?;
            let eval = evaluate(&PipelineConfig { seed, noise, ..config.clone() }, &rec.f_hat)?;
            log::info!("replicate {r} noise {noise}: d1 {:.4} d2 {:.4}", eval.d1, eval.d2);
            rows.push(NoiseRow { noise, replicate: r, alpha_hat: est.alpha_hat, eval });
        }
    }
    Ok(rows)
}

/// Per-level means over replicates, in the order of `levels`.
pub fn noise_means(rows: &[NoiseRow], levels: &[f64]) -> Vec<(f64, f64, f64)> {
    levels
        .iter()
        .map(|&n| {
            let sel: Vec<&NoiseRow> = rows.iter().filter(|r| r.noise == n).collect();
            let k = sel.len().max(1) as f64;
            (n, sel.iter().map(|r| r.eval.d1).sum::<f64>() / k, sel.iter().map(|r| r.eval.d2).sum::<f64>() / k)
        })
        .collect()
}

pub fn noise_table_csv(config: &PipelineConfig, rows: &[NoiseRow]) -> String {
    let hash = config.hash();
    let mut s = String::from("noise,replicate,alpha_hat,d1,d2,config_hash\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{hash}", r.noise, r.replicate, r.alpha_hat, r.eval.d1, r.eval.d2);
    }
    s
}

pub fn cmd_noise_study(config: &PipelineConfig, levels: &[f64], replicates: u64) -> Result<PathBuf> {
    let rows = noise_study(config, levels, replicates)?;
    let out = path(config, NOISE_TABLE);
    write_text(&out, &noise_table_csv(config, &rows), None)?;
    Ok(out)
}
