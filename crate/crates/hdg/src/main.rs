use std::process::ExitCode;

use clap::Parser;
use hdg::cli::{check_command, failure_code, run_command, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run_command(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(failure_code(&e))
            }
        },
        Command::Check(args) => match check_command(&args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(failure_code(&e))
            }
        },
    }
}
