mod args;
mod run;

use std::process::ExitCode;

use breakchain::report::to_json_string;
use clap::Parser;

use args::Cli;
use run::{execute, resolve, write_outputs, Failure};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn main_inner(cli: &Cli) -> Result<u8, Failure> {
    let cfg = resolve(cli)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("cannot start {threads} workers: {e}")))?;
    }
    let outcome = execute(cfg, cli.timing)?;
    match &cli.out {
        Some(dir) => {
            write_outputs(dir, &outcome)?;
            eprintln!("wrote {}", dir.join("results.json").display());
        }
        None => print!("{}", to_json_string(&outcome.results)?),
    }
    Ok(if outcome.failed_validation { 2 } else { 0 })
}
