use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deformfield_cli::pipeline;
use deformfield_cli::{CliError, PipelineConfig};

#[derive(Parser, Debug)]
#[command(name = "deformfield", version, about = "Simulate and recover deformed isotropic random fields")]
struct Cli {
    /// Configuration file of `key = value` lines; defaults apply otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "DEFORMFIELD_THREADS")]
    threads: Option<usize>,
    /// Accept input artifacts produced under a different configuration.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the deformed field.
    Simulate,
    /// Estimate alpha and the per-block dilatation and scale.
    Estimate {
        /// Field file; defaults to `field.grd` in the output directory.
        field: Option<PathBuf>,
    },
    /// Smooth, reconstruct by flow and apply the conformal correction.
    Reconstruct {
        /// Dilatation CSV; defaults to `dilatation.csv` in the output directory.
        csv: Option<PathBuf>,
    },
    /// Distances of the estimated map to the true deformation.
    Evaluate {
        /// Estimated map; defaults to `f_hat.grd` in the output directory.
        f_hat: Option<PathBuf>,
    },
    /// Run every stage.
    Pipeline,
    /// Repeat the pipeline over noise levels and replicate seeds.
    NoiseStudy {
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.25")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
    },
    /// Print the effective configuration.
    Config,
}

fn load(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            PipelineConfig::parse(&text)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot use {n} threads: {e}")))?;
    }
    let config = load(&cli)?;
    let default = |name: &str| config.out.join(name);
    match cli.command {
        Command::Simulate => {
            let p = pipeline::cmd_simulate(&config)?;
            println!("{}", p.display());
        }
        Command::Estimate { field } => {
            let p = pipeline::cmd_estimate(&config, &field.unwrap_or_else(|| default(pipeline::FIELD)), cli.force)?;
            println!("{}", p.display());
        }
        Command::Reconstruct { csv } => {
            let p =
                pipeline::cmd_reconstruct(&config, &csv.unwrap_or_else(|| default(pipeline::DILATATION)), cli.force)?;
            println!("{}", p.display());
        }
        Command::Evaluate { f_hat } => {
            let p = pipeline::cmd_evaluate(&config, &f_hat.unwrap_or_else(|| default(pipeline::F_HAT)), cli.force)?;
            print!("{}", std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?);
        }
        Command::Pipeline => {
            let e = pipeline::cmd_pipeline(&config)?;
            println!("d1 = {:.6}\nd2 = {:.6}", e.d1, e.d2);
        }
        Command::NoiseStudy { levels, replicates } => {
            let p = pipeline::cmd_noise_study(&config, &levels, replicates)?;
            print!("{}", std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?);
        }
        Command::Config => print!("{}", config.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
