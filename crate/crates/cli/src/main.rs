use std::process::ExitCode;

use clap::Parser;
use resonant_cli::{run, Cli};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
