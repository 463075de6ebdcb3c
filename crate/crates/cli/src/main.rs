mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Cycle(a) => commands::cycle(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Taumin(a) => commands::taumin(a),
        Command::Analytic(a) => commands::analytic(a),
        Command::Plot(a) => commands::plot(a),
        Command::Verify(a) => commands::verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            f.exit_code()
        }
    }
}
