use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use eb_shrink_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if outcome.path.is_none() {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(outcome.text.as_bytes()).is_err() {
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
