mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{CliResult, EXIT_VALIDATION};

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::TestIndependence(a) => commands::test_independence(a),
        Command::TestAsymmetry(a) => commands::test_asymmetry(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Mc(a) => commands::mc(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
