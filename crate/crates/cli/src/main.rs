mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::{merge_file, CliResult, RunConfig};

fn run(cli: &Cli) -> CliResult<()> {
    let flags = cli.command.options();
    let merged = match &flags.config {
        Some(path) => merge_file(flags, path)?,
        None => flags.clone(),
    };
    let cfg = RunConfig::from_options(&merged)?;
    match &cli.command {
        Command::Spectrum(_) => commands::spectrum(&cfg),
        Command::Verify(_) => commands::verify(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Evolve(_) => commands::evolve(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pseudoherm {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
