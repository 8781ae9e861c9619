//! `hcbound` command-line interface.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use hcbound::Error;

use args::{Cli, Command};
use commands::Status;

const THREADS_VAR: &str = "HCB_THREADS";

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be a positive integer, got 0"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::QuadratureNonConvergence { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let run = |args: args::CommonArgs, f: fn(&args::CommonArgs) -> hcbound::Result<Status>| {
        args.resolve().and_then(|a| f(&a))
    };
    let result = match cli.command {
        Command::Transform(a) => run(a, commands::transform_cmd),
        Command::Bound(a) => run(a, commands::bound_cmd),
        Command::OracleCheck(a) => run(a, commands::oracle_check_cmd),
        Command::Sweep(a) => run(a, commands::sweep_cmd),
    };
    match result {
        Ok(Status::Passed) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
