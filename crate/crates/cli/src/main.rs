mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Render(a) => commands::render(a),
        Command::Assign(a) => commands::assign(a),
        Command::Track(a) => commands::track(a),
        Command::Eval(a) => commands::eval(a),
        Command::SymmetryCheck(a) => commands::symmetry_check(a),
        Command::RangeDemo(a) => commands::range_demo(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Nds(a) => commands::nds_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
