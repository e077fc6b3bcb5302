use std::process::ExitCode;

use clap::Parser;
use translucent_replay::{run, ReplayArgs};

fn main() -> ExitCode {
    let args = ReplayArgs::parse();
    match run(&args) {
        Ok(output) => {
            print!("{}", output.summary);
            for path in output.written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
