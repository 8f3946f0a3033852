use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use asap_cli::presets::Preset;
use asap_cli::{cmd_calibrate, cmd_preset, cmd_run, write_grid, CliError};

/// Adaptive event packaging and filtering simulator.
#[derive(Parser)]
#[command(name = "asap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a built-in experiment.
    Preset {
        #[arg(value_parser = |s: &str| s.parse::<Preset>())]
        name: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fixed points of the packaging loop over a grid of affine costs.
    Converge {
        #[arg(long, required = true)]
        grid: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the sizing-law calibration.
    Calibrate {
        #[arg(long, required = true)]
        print: bool,
        /// Take the parameters from a scenario file instead of the defaults.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let files = cmd_run(&scenario, &out, seed)?;
            println!("{}", files.metrics.display());
        }
        Command::Preset { name, out, seed } => {
            for p in cmd_preset(name, &out, seed)? {
                println!("{}", p.display());
            }
        }
        Command::Converge { out, .. } => {
            write_grid(&out)?;
            println!("{}", out.display());
        }
        Command::Calibrate { scenario, .. } => print!("{}", cmd_calibrate(scenario.as_deref())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("asap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
