//! Command-line runner for the multimodal mobility-on-demand model: config
//! loading, CSV inputs, report writing and the experiment commands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Method, RunConfig};
use crate::error::CliError;
use crate::io::Reporter;

#[derive(Debug, Parser)]
#[command(name = "modsim", version, about = "Mobility-on-demand supply design experiments")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "MODSIM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel evaluations (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Config override `section.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the merged config as TOML and exit.
    #[arg(long, global = true)]
    pub print_effective_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Bo,
    Random,
    Grid,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One simulated period with modes drawn from fixed shares.
    Simulate,
    /// Iterate mode choice and simulation to equilibrium at fixed supply.
    Equilibrium,
    /// Search fleet sizes and discounts for maximum operator profit.
    Optimize {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Sweep the transit constant with one large ride-hailing fleet.
    CalibrateAsc,
    /// Compare discount scenarios, levies and discount multipliers.
    Scenario,
}

/// Resolves the effective config: file, then `--set`, then dedicated flags.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut overrides = cli.set.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Command::Optimize { method: Some(m) } = &cli.command {
        let name = match m {
            MethodArg::Bo => "bo",
            MethodArg::Random => "random",
            MethodArg::Grid => "grid",
        };
        overrides.push(format!("optimize.method=\"{name}\""));
    }
    RunConfig::load(cli.config.as_deref(), &overrides)
}

/// Runs one command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = effective_config(cli)?;
    if cli.print_effective_config {
        print!("{}", cfg.to_toml());
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| {
        let inst = commands::build_instance(&cfg)?;
        let rep = Reporter::new(&cli.out, &cfg.hash(), cfg.seed)?;
        let mut files = vec![rep.text("config.toml", &cfg.to_toml())?];
        files.extend(match cli.command {
            Command::Simulate => commands::simulate(&cfg, &inst, &rep)?,
            Command::Equilibrium => commands::equilibrium(&cfg, &inst, &rep)?,
            Command::Optimize { .. } => commands::optimize(&cfg, &inst, &rep)?,
            Command::CalibrateAsc => commands::calibrate_asc(&cfg, &inst, &rep)?,
            Command::Scenario => commands::scenario(&cfg, &inst, &rep)?,
        });
        Ok(files)
    })
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bo => Method::Bo,
            MethodArg::Random => Method::Random,
            MethodArg::Grid => Method::Grid,
        }
    }
}
