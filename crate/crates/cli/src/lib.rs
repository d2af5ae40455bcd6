//! Command-line front end: run configuration, the `simulate`, `verify`,
//! `closed-form` and `geometry` commands, and CSV/JSON emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "supint", version, about = "Superintegrable system toolkit")]
pub struct Cli {
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `verification.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the initial state and report drift of the integrals.
    Simulate(RunArgs),
    /// Check involution, independence and the algebraic identities.
    Verify(RunArgs),
    /// Evaluate the exact E > 0 orbit and compare with the integrator.
    #[command(name = "closed-form")]
    ClosedForm(RunArgs),
    /// Tabulate curvature, Green function and potentials on a radial grid.
    Geometry(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) | Command::Verify(a) | Command::ClosedForm(a) | Command::Geometry(a) => a,
        }
    }
}

fn load_config(args: Option<&RunArgs>) -> Result<RunConfig> {
    let mut config = match args.and_then(|a| a.config.as_deref()) {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.and_then(|a| a.seed) {
        config.verification.seed = seed;
    }
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs one invocation; returns the text to print on standard output.
pub fn run(cli: &Cli) -> Result<String> {
    let args = cli.command.as_ref().map(Command::args);
    let config = load_config(args)?;
    if cli.dump_config {
        return config.to_json();
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Config {
            path: PathBuf::from("<command line>"),
            line: None,
            message: "no command given (simulate, verify, closed-form, geometry)".into(),
        });
    };
    let out = &command.args().out;
    ensure_dir(out)?;
    Ok(match command {
        Command::Simulate(_) => {
            let s = commands::simulate(&config, out)?;
            format!(
                "simulate: {} rows, max relative drift {:e} (bound {:e}) {}\n",
                s.rows,
                s.drift.max_drift(),
                s.drift.bound,
                verdict(s.drift.pass)
            )
        }
        Command::Verify(_) => {
            let r = commands::verify(&config, out)?;
            let mut text = String::new();
            for c in &r.checks {
                text.push_str(&format!(
                    "{:<28} max {:<12.3e} tol {:<9.1e} {}\n",
                    c.name,
                    c.max_residual,
                    c.tolerance,
                    verdict(c.pass)
                ));
            }
            text
        }
        Command::ClosedForm(_) => {
            let c = commands::closed_form(&config, out)?;
            format!(
                "closed-form: {} rows, max |dq| {:e}, max |dp| {:e} (tol {:e}) {}\n",
                c.rows,
                c.max_dq,
                c.max_dp,
                c.tolerance,
                verdict(c.pass)
            )
        }
        Command::Geometry(_) => {
            let g = commands::geometry(&config, out)?;
            format!("geometry: {} radii, n = {}, kappa = {}\n", g.rows.len(), g.n, g.kappa)
        }
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
