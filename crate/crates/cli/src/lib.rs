//! Command-line pipeline for the work statistics of a driven two-level system
//! in a strongly coupled bath.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "polwork", version, about = "Work statistics of the dissipative Landau-Zener sweep")]
pub struct Cli {
    /// TOML run configuration; the built-in default is the strong-coupling reference sweep.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Print the renormalisation constant, g and the validity diagnostics.
    Kappa,
    /// Build and export the rate and Lamb-shift tables.
    BathTables,
    /// Sample the characteristic function on the counting-field grid.
    Cf,
    /// Invert a sampled characteristic function into a binned work distribution.
    Dist {
        /// CF file to invert instead of the ones in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Mean and variance of the work over an (alpha, beta) grid, both frames.
    Moments {
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
    },
    /// Check the Jarzynski equality.
    Jarzynski,
    /// Population dynamics of the master equations and the closed system.
    Dynamics {
        /// External (t, sigma_z) CSV to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Closed-system sweep: unitary solve and asymptotic formula.
    ClosedLz,
    /// Run the property checks on the configured parameters.
    Validate,
    /// Print the effective configuration.
    Config,
}

/// Resolves the configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    match &cli.command {
        Command::Moments { alphas, betas } => {
            if !alphas.is_empty() {
                cfg.moments.alphas = alphas.clone();
            }
            if !betas.is_empty() {
                cfg.moments.betas = betas.clone();
            }
        }
        Command::Dynamics { reference: Some(r) } => cfg.dynamics.reference = Some(r.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command inside a pool sized by the configured thread budget.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.threads)
        .build()
        .map_err(|e| CliError::Config(format!("output.threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Kappa => commands::kappa_cmd(&cfg, out),
        Command::BathTables => commands::bath_tables_cmd(&cfg, out),
        Command::Cf => commands::cf_cmd(&cfg, out),
        Command::Dist { input } => commands::dist_cmd(&cfg, input.as_deref(), out),
        Command::Moments { .. } => commands::moments_cmd(&cfg, out),
        Command::Jarzynski => commands::jarzynski_cmd(&cfg, out),
        Command::Dynamics { .. } => commands::dynamics_cmd(&cfg, out),
        Command::ClosedLz => commands::closed_lz_cmd(&cfg, out),
        Command::Validate => commands::validate_cmd(&cfg, out),
        Command::Config => write!(out, "{}", cfg.to_toml()).map_err(|e| CliError::io("stdout", e)),
    })
}
