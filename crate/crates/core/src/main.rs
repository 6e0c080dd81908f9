use std::process::ExitCode;

use clap::Parser;
use rchwave::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rchwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
