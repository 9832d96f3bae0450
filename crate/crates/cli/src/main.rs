//! `geodisc` command-line interface.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::{CheckFlags, ShootFlags, SimulateFlags};

#[derive(Debug, Parser)]
#[command(name = "geodisc", version, about = "Symplectic integrators from lifted discretization maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate forward from an initial state and write the trajectory
    Simulate(SimulateFlags),
    /// Solve a boundary value problem by single shooting over the costates
    Shoot(ShootFlags),
    /// Run verification suites and print a JSON report
    Check(CheckFlags),
    /// Plot the xy path of a trajectory CSV as SVG
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: PathBuf,
        /// Obstacle radius; draws the obstacle when given
        #[arg(long)]
        r: Option<f64>,
        /// Obstacle center as x,y
        #[arg(long, allow_hyphen_values = true, requires = "r")]
        center: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(flags) => commands::cmd_simulate(&config::simulate_config(&flags).map_err(Failure::config)?),
        Command::Shoot(flags) => commands::cmd_shoot(&config::shoot_config(&flags).map_err(Failure::config)?),
        Command::Check(flags) => {
            let env_seed = std::env::var("GEODISC_SEED").ok();
            commands::cmd_check(&config::check_config(&flags, env_seed.as_deref()).map_err(Failure::config)?)
        }
        Command::Plot { csv, svg, r, center } => {
            let center = match center {
                Some(s) => config::parse_center(&s).map_err(Failure::config)?,
                None => [0.0, 0.0],
            };
            commands::cmd_plot(&csv, &svg, r.map(|r| (r, center)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", Failure::config(first).line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(f.code as u8)
        }
    }
}
