use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use funcband::cli::{error_json, run, Invocation, Verb};

/// Conformal prediction bands for functional time series.
#[derive(Debug, Parser)]
#[command(name = "funcband", version)]
struct Args {
    /// simulate | study | ingest | precompute | backtest | serve
    command: String,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (for `serve`, the artifact directory).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed and FUNCBAND_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Address for `serve`, e.g. 127.0.0.1:8080.
    #[arg(long)]
    bind: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = args.command.parse::<Verb>().and_then(|verb| {
        run(&Invocation {
            verb,
            config: args.config,
            out: args.out,
            seed: args.seed,
            threads: args.threads,
            bind: args.bind,
        })
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in outcome.files {
                println!("  {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
