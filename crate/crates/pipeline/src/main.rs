use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use biphoton_pipeline::config::{RunConfig, OUTPUT_ROOT_ENV};
use biphoton_pipeline::error::{PipelineError, Result};
use biphoton_pipeline::{report, retrieve, selftest, simulate};

#[derive(Parser)]
#[command(name = "ssi-pipeline", version, about = "Simulate and retrieve spectral-shearing biphoton measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate interferograms, JSI and spatial data for a configuration.
    Simulate {
        /// JSON run configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenario: Option<String>,
        /// Run directory; defaults to `$SSI_OUTPUT_ROOT/<scenario>`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Retrieve phases, temporal intensities and fits for a simulated run.
    Retrieve {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Refit the dispersion polynomial on retrieved phase surfaces.
    Fit { dir: PathBuf },
    /// Consolidated JSON and SVG figures for one or more runs.
    Report {
        dirs: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quick end-to-end invariant checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            scenario,
            output_dir,
            jobs,
        } => {
            let mut cfg = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = scenario {
                cfg.scenario = s;
            }
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            let m = simulate::simulate(&cfg, jobs)?;
            println!("{} ({} files, content {})", cfg.run_dir().display(), m.files.len(), m.content_hash());
        }
        Command::Retrieve { dir, jobs } => {
            retrieve::retrieve(&dir, jobs)?;
            for k in 0.. {
                let path = dir.join(biphoton_pipeline::manifest::ps_dir(k)).join("fit.json");
                if !path.exists() {
                    break;
                }
                let r: retrieve::FitRecord = biphoton_pipeline::manifest::read_json("retrieve", &path)?;
                println!("ps{k:02}: GDD {:.5e} fs², TOD {:.4e} fs³", r.fit.gdd, r.fit.tod);
            }
        }
        Command::Fit { dir } => {
            let m = retrieve::fit(&dir)?;
            println!("{} ({} files)", dir.display(), m.files.len());
        }
        Command::Report { dirs, output } => {
            let r = report::report(&dirs, output.as_deref())?;
            println!("{} figures", r.figures.len());
        }
        Command::Selftest { jobs } => {
            let checks = selftest::selftest(jobs)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(PipelineError::new(
                    biphoton_pipeline::ErrorKind::Numerical,
                    "selftest",
                    format!("{failed} of {} checks failed", checks.len()),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    log::debug!("output root from ${OUTPUT_ROOT_ENV}");
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
