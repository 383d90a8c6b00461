mod args;
mod commands;
mod error;
mod generate;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Frontier(a) => commands::frontier(a),
        Command::Compare(a) => commands::compare(a),
        Command::Equiv(a) => commands::equiv(a),
        Command::ExportLp(a) => commands::export_lp(a),
        Command::Generate(a) => commands::generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
