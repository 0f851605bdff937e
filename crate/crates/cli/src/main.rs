use std::process::ExitCode;

use mshit_cli::{dispatch, parse_invocation, CliError, EXIT_FAILURE};

fn main() -> ExitCode {
    let result = parse_invocation(std::env::args_os()).and_then(|config| dispatch(&config));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("mshit: one or more checks failed");
            ExitCode::from(EXIT_FAILURE)
        }
        Err(CliError::Info(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mshit: {}", e.to_string().trim_end());
            ExitCode::from(e.exit_code())
        }
    }
}
