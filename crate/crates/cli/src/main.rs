mod commands;

use std::process::ExitCode;

use clap::Parser;
use crt_core::CrtError;

use commands::Cli;

/// Exit codes: 0 success, 2 validation failure (including usage errors), 3 I/O or
/// malformed-file failure.
fn exit_code(e: &CrtError) -> u8 {
    match e {
        CrtError::Io(_) | CrtError::Format { .. } => 3,
        _ => 2,
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("CRT_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("CRT_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
