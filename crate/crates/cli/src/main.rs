use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{error, info, warn};
use sepcov_core::harness::{self, emit_outputs, Experiment, ExperimentConfig, Report};

const OUTPUT_ENV: &str = "SEPCOV_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "sepcov-out";

#[derive(Parser)]
#[command(name = "sepcov", version, about = "Exclusion processes on covering towers of amenable groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides the environment and the configuration.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Also fail (exit 3) on statistical trend checks.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the quotient tower and write summaries and edge lists.
    BuildTower(Common),
    /// Exceedance probabilities of the time-integrated functional along the tower.
    Superexp(Common),
    /// Variance and time-averaged error of local averages.
    OneBlock(Common),
    /// Differences of block averages at distance sigma.
    TwoBlocks(Common),
    /// Følner boundary ratios and the sampled double-average deviation.
    FolnerReport(Common),
    /// Top eigenvalues of tilted generators and the Feynman-Kac bound.
    SpectralCheck(Common),
    /// The path lemma over random translation-invariant functions.
    PathLemma(Common),
}

type Runner = fn(&Experiment) -> sepcov_core::Result<Report>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (common, run): (&Common, Runner) = match &cli.command {
        Command::BuildTower(c) => (c, harness::run_build_tower),
        Command::Superexp(c) => (c, harness::run_superexp),
        Command::OneBlock(c) => (c, harness::run_one_block),
        Command::TwoBlocks(c) => (c, harness::run_two_blocks),
        Command::FolnerReport(c) => (c, harness::run_folner_report),
        Command::SpectralCheck(c) => (c, harness::run_spectral_check),
        Command::PathLemma(c) => (c, harness::run_path_lemma),
    };

    let experiment = match load(common) {
        Ok(e) => e,
        Err(e) => {
            error!("{e:#}");
            return ExitCode::from(1);
        }
    };
    let report = match execute(common, &experiment, run) {
        Ok(r) => r,
        Err(e) => {
            error!("{e:#}");
            return ExitCode::from(2);
        }
    };

    let mut failed = false;
    for check in &report.checks {
        if check.passed {
            continue;
        }
        if check.statistical && !common.strict {
            warn!("check not met: {} ({})", check.name, check.detail);
        } else {
            error!("check failed: {} ({})", check.name, check.detail);
            failed = true;
        }
    }
    if failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn load(common: &Common) -> anyhow::Result<Experiment> {
    let config = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    Ok(config.prepare()?)
}

fn output_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &common.output_dir {
        return dir.clone();
    }
    if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    match &config.output_dir {
        Some(dir) if dir.is_absolute() => dir.clone(),
        Some(dir) => config.base_dir.join(dir),
        None => PathBuf::from(DEFAULT_OUTPUT),
    }
}

fn execute(common: &Common, experiment: &Experiment, run: Runner) -> anyhow::Result<Report> {
    let report = run(experiment)?;
    let dir = output_dir(common, &experiment.config);
    let written = emit_outputs(std::slice::from_ref(&report), &dir)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    for p in &written {
        info!("wrote {}", p.display());
    }
    Ok(report)
}
