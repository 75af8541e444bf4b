use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cloudlet_core::config::ConfigError;
use cloudlet_core::{report, run_matrix, MetricsReport, SimConfig, SimError, Strategy};

/// Time-slotted avatar placement simulator.
#[derive(Parser)]
#[command(name = "cloudlet-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured strategy at the configured alpha.
    Run(Common),
    /// Run every (strategy, alpha) pair on one shared realization.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        alphas: Vec<f64>,
        /// Comma-separated strategies.
        #[arg(long, value_delimiter = ',', default_value = "primal,far,static")]
        strategies: Vec<Strategy>,
    },
    /// Run all three strategies at the configured alpha.
    Compare(Common),
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "override", num_args = 1.., value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file. Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long = "override", num_args = 1.., value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(ConfigError),
    Usage(String),
    Sim(SimError),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Config(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Failure::Sim(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => Failure::Config(c),
            other => Failure::Sim(other),
        }
    }
}

fn load(config: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<SimConfig, ConfigError> {
    let base = match config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    let mut cfg = base.with_overrides(overrides)?;
    if let Some(seed) = seed {
        cfg.simulation.seed = seed;
    }
    Ok(cfg)
}

fn prepare(common: &Common) -> Result<SimConfig, Failure> {
    let cfg = load(common.config.as_deref(), &common.overrides, common.seed).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", common.out.display())))?;
    Ok(cfg)
}

fn emit(out: &Path, cfg: &SimConfig, reports: &[MetricsReport]) -> Result<(), Failure> {
    let unwritable = |e: &dyn std::fmt::Display| Failure::Usage(format!("cannot write to {}: {e}", out.display()));
    report::write_all(out, reports).map_err(|e| unwritable(&e))?;
    std::fs::write(out.join("config_effective.txt"), cfg.to_toml()).map_err(|e| unwritable(&e))?;
    for r in reports {
        let overlong = r.overlong_migrations();
        if overlong > 0 {
            eprintln!(
                "warning: {} alpha={}: {overlong} migrations took longer than one slot",
                r.strategy, r.alpha
            );
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(common) => {
            let cfg = prepare(&common)?;
            let reports = run_matrix(&cfg, &[cfg.simulation.strategy], &[cfg.migration.alpha])?;
            emit(&common.out, &cfg, &reports)
        }
        Command::Compare(common) => {
            let cfg = prepare(&common)?;
            let reports = run_matrix(&cfg, &Strategy::ALL, &[cfg.migration.alpha])?;
            emit(&common.out, &cfg, &reports)
        }
        Command::Sweep {
            common,
            alphas,
            strategies,
        } => {
            if alphas.is_empty() || strategies.is_empty() {
                return Err(Failure::Usage("--alphas and --strategies must be non-empty".into()));
            }
            if let Some(a) = alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
                return Err(Failure::Usage(format!("alpha must be finite and >= 0, got {a}")));
            }
            let cfg = prepare(&common)?;
            let reports = run_matrix(&cfg, &strategies, &alphas)?;
            emit(&common.out, &cfg, &reports)
        }
        Command::Validate {
            config,
            overrides,
            seed,
        } => {
            let cfg = load(config.as_deref(), &overrides, seed).map_err(Failure::Config)?;
            let checks = cfg.checks();
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                println!("{status}  {:width$}  {}", c.name, c.detail);
            }
            cfg.validate().map_err(Failure::Config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
