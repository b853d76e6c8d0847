use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod cmd;

use cmd::Cli;

/// Exit status for each error class.
fn exit_code(err: &volrank::Error) -> u8 {
    use volrank::Error::*;
    match err {
        Shape(_) | Argument(_) => 2,
        Parse { .. } => 3,
        Numeric(_) | Degenerate(_) => 4,
        Io(_) => 5,
        Study { source, .. } => exit_code(source),
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error kind=usage message={}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match cmd::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} message={}", e.kind_str(), one_line(&e.to_string()));
            ExitCode::from(exit_code(&e))
        }
    }
}
