use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use corrugated_core::study::{self, ConfigError, Overrides, StudyConfig, StudyError, PRESETS};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 verdict passed, 1 verdict failed, 2 configuration error,
/// 3 numerical or I/O failure.
#[derive(Parser, Debug)]
#[command(name = "corrugated", version, about = "Spectral convergence studies for domains with boundary resonators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an ε sweep and write spectra, meshes and the convergence report.
    Study {
        /// TOML study configuration (see docs/config.md).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, env = "CORRUGATED_OUT_DIR")]
        out: Option<PathBuf>,
        /// Reproduction preset; overrides the `preset` key of the config.
        #[arg(long)]
        preset: Option<String>,
        /// Number of ε values solved concurrently (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Requested spectral cutoff Λ; overrides the config.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// List the reproduction presets.
    Presets,
}

const EXIT_VERDICT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Marks errors that should exit with the configuration code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load(config: Option<PathBuf>, overrides: &Overrides) -> Result<StudyConfig, ConfigError> {
    match config {
        Some(path) => study::load_config(&path, overrides),
        None => study::parse_config_with("", overrides),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Presets => {
            for p in PRESETS {
                let c = StudyConfig::from_preset(p.name)?;
                let op = corrugated_core::LimitProblem::for_regime(&c.regime).name();
                println!("{:<16} alpha={:<4} beta={:<4} limit={op}", p.name, p.alpha, p.beta);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Study {
            config,
            out,
            preset,
            jobs,
            lambda,
        } => {
            if config.is_none() && preset.is_none() {
                bail!(UsageError("give --config, --preset, or both".into()));
            }
            let overrides = Overrides { preset, lambda };
            let cfg = load(config, &overrides).map_err(StudyError::from)?;
            let Some(dir) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!(UsageError(
                    "no output directory: pass --out, set CORRUGATED_OUT_DIR or `output_dir` in the config".into()
                ));
            };
            if jobs == Some(0) {
                bail!(UsageError("--jobs must be at least 1".into()));
            }
            let (artifacts, report) = study::run_study(&cfg, &dir, jobs)?;
            println!("{:>10} {:>12} {:>8}", "eps", "dist_H", "dofs");
            for row in &report.rows {
                println!("{:>10} {:>12.6} {:>8}", row.eps, row.dist_h, row.dof_count);
            }
            println!("cutoff {} (requested {})", report.lambda_used, report.lambda_requested);
            println!(
                "trend: {} ({})",
                if report.verdict.passed { "pass" } else { "FAIL" },
                report.verdict.reason
            );
            println!("threshold: {}", if report.threshold_passed { "pass" } else { "FAIL" });
            println!("report: {}", artifacts.report.display());
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERDICT_FAILED)
            })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<StudyError>() {
        Some(StudyError::Config(_)) => EXIT_CONFIG,
        _ if err.downcast_ref::<ConfigError>().is_some() => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
