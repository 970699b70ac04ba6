use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mlvms_cli::commands::{self, Overrides, Scale};
use mlvms_cli::CliError;

#[derive(Parser)]
#[command(name = "mlvms", version, about = "Multilevel VMS solver harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for the reduced-order initial modes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write metrics and field files.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the refinement ladder of a configuration.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare reduced-order and full solves over a list of mode counts.
    Modes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Single-track laser run (built-in workstation configuration by default).
    Lpbf {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the invariant checks.
    Verify,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out,
        scale: match cli.scale {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        },
    };
    match cli.command {
        Command::Solve { config } => commands::solve(&config, &ov).map(drop),
        Command::Converge { config } => commands::converge_cmd(&config, &ov).map(drop),
        Command::Modes { config } => commands::modes_cmd(&config, &ov).map(drop),
        Command::Lpbf { config } => commands::lpbf(config.as_deref(), &ov).map(drop),
        Command::Verify => commands::verify(),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
