//! `netepi`: scenario runs for networked SIR/SEIR models.
//!
//! Exit codes: 0 on success (and identifiable data for `estimate`), 1 on any
//! error including an assumption violation, 2 when `estimate` finds the data
//! not identifiable.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use netepi_core::estimation::EstimateTarget;

#[derive(Debug, Parser)]
#[command(name = "netepi", version, about = "Networked SIR/SEIR simulation and parameter identification")]
struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the scenario's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Enforce the well-posedness assumptions and simplex checks (default).
    #[arg(long, global = true, overrides_with = "no_strict")]
    strict: bool,
    /// Report assumption and simplex violations as warnings only.
    #[arg(long = "no-strict", global = true, overrides_with = "strict")]
    no_strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the scenario and write trajectory.csv and simulate.json.
    Simulate,
    /// Spectral convergence diagnostics of a trajectory.
    Diagnose {
        /// Trajectory CSV; defaults to `<out>/trajectory.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Add the scenario's measurement noise to a trajectory.
    Perturb {
        /// Trajectory CSV; defaults to `<out>/trajectory.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Estimate spreading parameters and write estimate.json.
    Estimate {
        /// Measured CSV; defaults to `<out>/measured.csv` when the scenario
        /// has noise and `<out>/trajectory.csv` otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Overrides the scenario's estimate kind.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    SirHomogeneous,
    SirHeterogeneous,
    SeirHomogeneous,
    SeirHeterogeneous,
}

impl From<Kind> for EstimateTarget {
    fn from(kind: Kind) -> Self {
        match kind {
            Kind::SirHomogeneous => EstimateTarget::SirHomogeneous,
            Kind::SirHeterogeneous => EstimateTarget::SirHeterogeneous,
            Kind::SeirHomogeneous => EstimateTarget::SeirHomogeneous,
            Kind::SeirHeterogeneous => EstimateTarget::SeirHeterogeneous,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let path = cli
        .scenario
        .ok_or_else(|| anyhow::anyhow!("--scenario is required"))?;
    let mut scenario = scenario::Scenario::load(&path)?;
    if let Some(seed) = cli.seed {
        scenario.reseed(seed);
    }
    if let Some(out) = cli.out {
        scenario.output = out;
    }
    let ctx = commands::Context {
        scenario,
        strict: !cli.no_strict,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Diagnose { input } => commands::diagnose(&ctx, input),
        Command::Perturb { input } => commands::perturb(&ctx, input),
        Command::Estimate { input, kind } => commands::estimate(&ctx, input, kind.map(Into::into)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NETEPI_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
