use std::io;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use krnet_cli::{run, Cli, ExitKind};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            // Usage errors are configuration errors, reported on one line.
            let message = if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                "no subcommand given; see krnet --help".to_string()
            } else {
                e.to_string()
                    .lines()
                    .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more"))
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            eprintln!("krnet: {}", message.trim_start_matches("error: "));
            return ExitCode::from(ExitKind::Config as u8);
        }
    };
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("krnet: {e}");
            ExitCode::from(e.code())
        }
    }
}
