use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use polyembed_cli::{invocation_line, run, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let invocation = invocation_line(&args);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = run(&cli, &invocation, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polyembed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
