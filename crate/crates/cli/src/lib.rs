//! Configuration and workflows behind the `riskgap` binary.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{CliError, CliResult};
pub use config::{parse_config, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "riskgap", version, about = "Optimality-gap experiments for risk-averse sample average approximation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `master_seed` from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to `out` from the configuration, then `riskgap-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single gap estimate for the candidate.
    Gap(CommonArgs),
    /// Statistical upper bound (mrp, srp or a2rp per the `procedure` field).
    Mrp(CommonArgs),
    /// Estimator expectations over a grid of fresh-sample sizes.
    BiasStudy(CommonArgs),
    /// Empirical coverage of the bound over macro-replications.
    Coverage(CommonArgs),
}

/// Reads the configuration, applies overrides and picks the output directory.
pub fn load(args: &CommonArgs) -> CliResult<(ExperimentConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(vec![format!("{}: {e}", args.config.display())]))?;
    let mut config = parse_config(&text).map_err(CliError::Config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("riskgap-out"));
    Ok((config, out))
}

type Workflow = fn(&ExperimentConfig, &Path) -> CliResult<String>;

/// Runs one command and returns a one-line summary for the terminal.
pub fn run(command: &Command) -> CliResult<String> {
    let (args, f): (&CommonArgs, Workflow) = match command {
        Command::Gap(a) => (a, |c, o| {
            commands::cmd_gap(c, o).map(|e| format!("gap {} (z_hat {}, z*_n {})", e.gap, e.z_hat, e.z_star_n))
        }),
        Command::Mrp(a) => (a, |c, o| {
            commands::cmd_mrp(c, o).map(|r| {
                format!("{} bound {} (point estimate {}, alpha {})", r.procedure.as_str(), r.b_alpha, r.point_estimate, r.alpha)
            })
        }),
        Command::BiasStudy(a) => (a, |c, o| {
            commands::cmd_bias_study(c, o).map(|rows| format!("{} bias rows", rows.len()))
        }),
        Command::Coverage(a) => (a, |c, o| {
            commands::cmd_coverage(c, o)
                .map(|r| format!("coverage {} ± {} over {} macro-replications", r.coverage, r.coverage_se, r.macro_reps))
        }),
    };
    let (config, out) = load(args)?;
    let summary = f(&config, &out)?;
    Ok(format!("{summary}; reports in {}", out.display()))
}
