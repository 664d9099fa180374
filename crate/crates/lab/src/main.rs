use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use signorini::harness::{check_load, read_config, run_experiment, run_limit, run_recover};
use signorini::Result;

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Incompressible Signorini energies: limit problems, h sweeps and recovery sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the limit problems, sweep h and write sweep.csv and report.txt.
    Run { config: PathBuf },
    /// Check the admissibility of the load and classify its kernel.
    CheckLoad { config: PathBuf },
    /// Solve E^I, G^I and G~^I and write the G~^I minimizer.
    Limit { config: PathBuf },
    /// Build the recovery sequence from the G~^I minimizer and check the upper bound.
    Recover { config: PathBuf },
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config } => {
            let cfg = read_config(&config)?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.render());
            if !report.records().is_empty() {
                println!("wrote {}", cfg.output.display());
            }
            Ok(report.passed())
        }
        Command::CheckLoad { config } => {
            let cfg = read_config(&config)?;
            let (setup, text) = check_load(&cfg)?;
            print!("{text}");
            Ok(setup.admissibility.is_admissible() && setup.kernel.agree)
        }
        Command::Limit { config } => {
            let cfg = read_config(&config)?;
            let (_, limits, text) = run_limit(&cfg)?;
            print!("{text}");
            Ok(limits.ordered() && limits.limits_agree())
        }
        Command::Recover { config } => {
            let cfg = read_config(&config)?;
            let (outcome, text) = run_recover(&cfg)?;
            print!("{text}");
            Ok(outcome.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(2)
        }
    }
}
