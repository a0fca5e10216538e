use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = aroi_cli::Cli::parse();
    match aroi_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
