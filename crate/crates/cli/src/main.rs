use std::process::ExitCode;

use clap::Parser;
use persuasion_cli::{configure_threads, run_command, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| run_command(&cli.command, &cli.opts));
    let report = match outcome {
        Ok(report) => report,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = report.to_json();
    match &cli.opts.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    if let Some(msg) = &report.error {
        eprintln!("{msg}");
    }
    ExitCode::from(report.exit_code as u8)
}
