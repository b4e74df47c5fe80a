use std::path::PathBuf;
use std::process::ExitCode;

use bakry_emery_cli::{list_builtins, load, run_scenario, RunError, RunOptions, EXIT_USAGE};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bemc", version, about = "Run Bakry-Emery geometry scenarios")]
struct Cli {
    /// Print the builtin spacetimes and exit.
    #[arg(long)]
    list_builtins: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every check of a scenario file.
    Run {
        file: PathBuf,
        /// Output directory (overrides the scenario's `output`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed for all sampling (overrides the scenario's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies all default tolerances.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Parse and validate the scenario without running it.
        #[arg(long)]
        validate_only: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    if cli.list_builtins {
        print!("{}", list_builtins());
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run { file, output, seed, tol_scale, validate_only }) = cli.command else {
        eprintln!("nothing to do: use `bemc run <file>` or `bemc --list-builtins`");
        return ExitCode::from(EXIT_USAGE as u8);
    };
    if validate_only {
        return match load(&file) {
            Ok(s) => {
                println!("{}: valid ({} checks, n = {}, N = {})", file.display(), s.names.len(), s.model.dim(), s.synthetic);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_USAGE as u8)
            }
        };
    }
    match run_scenario(&file, &RunOptions { output, seed, tol_scale }) {
        Ok(run) => {
            for o in &run.outcomes {
                match &o.message {
                    Some(m) => println!("{:<9} {}  {m}", o.status.label(), o.name),
                    None => println!("{:<9} {}", o.status.label(), o.name),
                }
            }
            println!("report written to {}", run.output_dir.join("report.json").display());
            ExitCode::from(run.report.exit_code as u8)
        }
        Err(e @ (RunError::Scenario(_) | RunError::TolScale(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
