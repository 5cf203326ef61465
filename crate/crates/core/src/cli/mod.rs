//! Command-line entry points: simulate, study, ingest, precompute, backtest, serve.
//!
//! Every command reads a flat `key = value` config (see [`Config`]) and
//! writes its outputs under `--out`. CSV outputs start with a
//! `# config_hash=<sha256>` line; JSON summaries carry the same hash.
//! The seed comes from `--seed`, else the `FUNCBAND_SEED` environment
//! variable, else the config's `seed` key, else 0.

mod commands;
mod config;

use std::path::PathBuf;
use std::str::FromStr;

use serde_json::json;

pub use commands::{load_books, run, Outcome};
pub use config::Config;

use crate::error::Error;

pub const SEED_ENV: &str = "FUNCBAND_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Simulate,
    Study,
    Ingest,
    Precompute,
    Backtest,
    Serve,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Simulate,
        Verb::Study,
        Verb::Ingest,
        Verb::Precompute,
        Verb::Backtest,
        Verb::Serve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Study => "study",
            Verb::Ingest => "ingest",
            Verb::Precompute => "precompute",
            Verb::Backtest => "backtest",
            Verb::Serve => "serve",
        }
    }
}

impl FromStr for Verb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub verb: Verb,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// `serve` only.
    pub bind: Option<String>,
}

impl Invocation {
    pub fn new(verb: Verb, out: impl Into<PathBuf>) -> Self {
        Invocation {
            verb,
            config: None,
            out: out.into(),
            seed: None,
            threads: None,
            bind: None,
        }
    }
}

/// Machine-readable error for stderr.
pub fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::Shape(_) => "shape",
        Error::Argument(_) => "argument",
        Error::RankDeficient { .. } => "rank_deficient",
        Error::Unavailable { .. } => "unavailable",
        Error::Unstable(_) => "unstable",
        Error::Decomposition(_) => "decomposition",
        Error::EntireSpace(_) => "entire_space",
        Error::Parse(_) => "parse",
        Error::Replication { .. } => "replication",
        Error::MissingDays(_) => "missing_days",
        Error::Io { .. } => "io",
    };
    let mut body = json!({"kind": kind, "message": e.to_string()});
    if let Error::Parse(p) = e {
        body["path"] = json!(p.path);
        body["line"] = json!(p.line);
    }
    json!({ "error": body }).to_string()
}
