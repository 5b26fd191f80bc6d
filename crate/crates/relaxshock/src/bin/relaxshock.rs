//! Command-line entry point: parses arguments, loads the configuration,
//! and dispatches to the experiment drivers in `relaxshock::runner`.
//! Exit codes: 0 success, 2 configuration or admissibility violations,
//! 3 runtime failure (blow-up, stiffness, i/o), 4 validation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaxshock::config::RunConfig;
use relaxshock::error::Result;
use relaxshock::runner;

#[derive(Parser)]
#[command(
    name = "relaxshock",
    version,
    about = "Planar viscous shock laboratory for a relaxed compressible flow model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the background shock profile and write its certificate.
    Profile(CommonArgs),
    /// Evolve a perturbed shock and record stability diagnostics.
    Stability(CommonArgs),
    /// Sweep relaxation times against the Newtonian reference.
    RelaxLimit {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated strictly descending relaxation times.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<f64>>,
    },
    /// Run the cross-module invariant suite.
    Validate(CommonArgs),
}

fn dispatch(cli: Cli) -> Result<()> {
    runner::init_thread_pool()?;
    match cli.command {
        Command::Profile(args) => {
            let config = RunConfig::load(&args.config)?;
            runner::cmd_profile(&config, &args.out)
        }
        Command::Stability(args) => {
            let config = RunConfig::load(&args.config)?;
            runner::cmd_stability(&config, &args.out)
        }
        Command::RelaxLimit { common, tau } => {
            let config = RunConfig::load(&common.config)?;
            runner::cmd_relax_limit(&config, tau.as_deref(), &common.out)
        }
        Command::Validate(args) => {
            let config = RunConfig::load(&args.config)?;
            runner::cmd_validate(&config, &args.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
