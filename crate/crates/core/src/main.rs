use std::process::ExitCode;

use clap::Parser;

use bosewell::cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match RunConfig::from_cli(cli).and_then(|config| run(&config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bosewell: {e}");
            ExitCode::FAILURE
        }
    }
}
