use std::process::ExitCode;

use bayesbin_cli::config::parse_and_validate;

fn main() -> ExitCode {
    let cfg = match parse_and_validate(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => e.exit(),
    };
    match bayesbin_cli::run(&cfg) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
