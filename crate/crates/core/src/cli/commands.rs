use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde_json::json;

use super::{Config, Invocation, Verb, SEED_ENV};
use crate::error::{Error, ParseError, Result};
use crate::func::{columnar, Grid};
use crate::market::{
    backtest_csv, generate_books, parse_books, run_backtest, to_csv, AuctionBook, BacktestConfig,
    BookFormat, MarketHistory, PriceConvention, SynthConfig, WindowConfig,
};
use crate::server::{precompute, serve, write_artifacts, ArtifactStore};
use crate::simlab::{
    replication_seed, report, run_study, simulate_series, standard_grid, DgpConfig, ModelKind,
    SplitKind, StudyConfig,
};

/// Files written by a command, plus a one-line human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

const COMMON: [&str; 2] = ["seed", "threads"];
const DGP_KEYS: [&str; 5] = ["dgp", "df", "burn_in", "grid_n", "t_len"];
const BOOK_KEYS: [&str; 8] = [
    "input",
    "format",
    "drop_operator",
    "synthetic",
    "synth_days",
    "synth_traders",
    "synth_pipeline_manager",
    "convention",
];
const WINDOW_KEYS: [&str; 5] = ["window", "l", "b", "grid_n", "grid_hi"];

fn allowed(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

/// Loads the config, applies the seed override and rejects unknown keys,
/// all before any work starts.
fn resolve(inv: &Invocation) -> Result<(Config, u64, Option<usize>)> {
    let mut cfg = match &inv.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| {
            Error::Argument(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
        })?),
        Err(_) => None,
    };
    if let Some(s) = inv.seed.or(env_seed) {
        cfg.set("seed", s);
    }
    let seed = cfg.get_or("seed", 0u64)?;
    let threads = match inv.threads {
        Some(t) => Some(t),
        None => cfg.get::<usize>("threads")?,
    };
    if threads == Some(0) {
        return Err(Error::Argument("threads must be >= 1".into()));
    }
    if inv.bind.is_some() && inv.verb != Verb::Serve {
        return Err(Error::Argument("--bind only applies to `serve`".into()));
    }
    let keys: Vec<&str> = match inv.verb {
        Verb::Simulate => allowed(&[&COMMON, &DGP_KEYS, &["replications"]]),
        Verb::Study => allowed(&[
            &COMMON,
            &DGP_KEYS,
            &["models", "cells", "alpha", "n_rep", "split"],
        ]),
        Verb::Ingest => allowed(&[&COMMON, &BOOK_KEYS]),
        Verb::Backtest => allowed(&[&COMMON, &BOOK_KEYS, &WINDOW_KEYS, &["alpha", "ranges"]]),
        Verb::Precompute => {
            allowed(&[&COMMON, &BOOK_KEYS, &WINDOW_KEYS, &["alphas", "from", "to"]])
        }
        Verb::Serve => allowed(&[&COMMON, &["artifacts"]]),
    };
    cfg.check_keys(&keys)?;
    Ok((cfg, seed, threads))
}

pub fn run(inv: &Invocation) -> Result<Outcome> {
    let (cfg, seed, threads) = resolve(inv)?;
    if inv.verb != Verb::Serve {
        std::fs::create_dir_all(&inv.out).map_err(|e| Error::io(&inv.out, e))?;
    }
    match inv.verb {
        Verb::Simulate => simulate(&cfg, seed, &inv.out),
        Verb::Study => study(&cfg, seed, threads, &inv.out),
        Verb::Ingest => ingest(&cfg, seed, &inv.out),
        Verb::Backtest => backtest(&cfg, seed, threads, &inv.out),
        Verb::Precompute => precompute_cmd(&cfg, seed, threads, &inv.out),
        Verb::Serve => {
            let dir = cfg
                .get::<PathBuf>("artifacts")?
                .unwrap_or_else(|| inv.out.clone());
            let store = ArtifactStore::open(&dir)?;
            let bind = inv.bind.clone().unwrap_or_else(|| "127.0.0.1:8080".into());
            eprintln!(
                "serving {} days from {} on http://{bind}",
                store.index().days.len(),
                dir.display()
            );
            serve(store, &bind)?;
            Ok(Outcome {
                files: Vec::new(),
                summary: "server stopped".into(),
            })
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// CSV with the config hash as a leading comment line.
fn write_csv(out: &Path, name: &str, hash: &str, body: &str) -> Result<PathBuf> {
    write_text(&out.join(name), &format!("# config_hash={hash}\n{body}"))
}

fn write_json(out: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Argument(format!("json: {e}")))?;
    write_text(&out.join(name), &(text + "\n"))
}

fn dgp_from(cfg: &Config, seed: u64) -> Result<DgpConfig> {
    let mut dgp = match cfg.raw("dgp").unwrap_or("var2") {
        "var2" => DgpConfig::default(),
        "iid" => DgpConfig::iid(),
        other => {
            return Err(Error::Argument(format!(
                "dgp `{other}` must be var2 or iid"
            )))
        }
    };
    dgp.df = match cfg.raw("df") {
        None => dgp.df,
        Some("gaussian") => None,
        Some(_) => Some(cfg.get_or("df", 4.0)?),
    };
    dgp.burn_in = cfg.get_or("burn_in", dgp.burn_in)?;
    dgp.grid_n = cfg.get_or("grid_n", dgp.grid_n)?;
    dgp.t_len = cfg.get_or("t_len", dgp.t_len)?;
    dgp.seed = seed;
    dgp.validate()?;
    Ok(dgp)
}

fn simulate(cfg: &Config, seed: u64, out: &Path) -> Result<Outcome> {
    let hash = cfg.hash();
    let base = dgp_from(cfg, seed)?;
    let reps: usize = cfg.get_or("replications", 1)?;
    let mut series = format!("# config_hash={hash}\n");
    let mut coefs = String::from("replication,t,c1,c2,c3\n");
    for r in 0..reps {
        let dgp = DgpConfig {
            seed: replication_seed(seed, r as u64),
            ..base.clone()
        };
        let sim = simulate_series(&dgp)?;
        writeln!(series, "# replication {r}").expect("string write");
        series.push_str(&columnar::write_series(sim.series.curves())?);
        for (t, c) in sim.coefs.iter().enumerate() {
            writeln!(coefs, "{r},{},{},{},{}", t + 1, c[0], c[1], c[2]).expect("string write");
        }
    }
    let files = vec![
        write_text(&out.join("series.txt"), &series)?,
        write_csv(out, "coefs.csv", &hash, &coefs)?,
    ];
    Ok(Outcome {
        files,
        summary: format!("{reps} series of {} curves", base.t_len + 1),
    })
}

fn parse_cells(cfg: &Config) -> Result<Vec<(usize, usize, usize)>> {
    match cfg.raw("cells") {
        None | Some("standard") => Ok(standard_grid()),
        Some(_) => cfg
            .list::<String>("cells")?
            .unwrap_or_default()
            .iter()
            .map(|c| {
                let parts: Vec<usize> = c
                    .split(':')
                    .map(|x| x.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        Error::Argument(format!("cell `{c}` must be b:T:l with positive integers"))
                    })?;
                match parts[..] {
                    [b, t, l] => Ok((b, t, l)),
                    _ => Err(Error::Argument(format!("cell `{c}` must be b:T:l"))),
                }
            })
            .collect(),
    }
}

fn study(cfg: &Config, seed: u64, threads: Option<usize>, out: &Path) -> Result<Outcome> {
    let hash = cfg.hash();
    let models = cfg
        .list::<ModelKind>("models")?
        .unwrap_or_else(|| ModelKind::ALL.to_vec());
    let cells = parse_cells(cfg)?;
    let alpha = cfg.get_or("alpha", 0.25)?;
    let n_rep = cfg.get_or("n_rep", 1000usize)?;
    let split = cfg.get_or("split", SplitKind::Contiguous)?;
    let dgp = dgp_from(cfg, seed)?;
    let mut configs = Vec::new();
    for &model in &models {
        for &(b, t_len, l) in &cells {
            let mut sc = StudyConfig::new(model, t_len, l, b, alpha, n_rep);
            sc.seed = seed;
            sc.split = split;
            sc.threads = threads;
            sc.dgp = DgpConfig {
                t_len,
                ..dgp.clone()
            };
            sc.validate()?;
            configs.push(sc);
        }
    }
    let results = configs.iter().map(run_study).collect::<Result<Vec<_>>>()?;
    let cells_json: Vec<_> = results
        .iter()
        .map(|r| {
            json!({
                "model": r.config.model.to_string(),
                "b": r.config.b,
                "T": r.config.t_len,
                "l": r.config.l,
                "coverage": r.coverage,
                "coverage_ci99": [r.coverage_ci99.0, r.coverage_ci99.1],
                "size": {"q1": r.size.q1, "median": r.size.median, "q3": r.size.q3},
            })
        })
        .collect();
    let files = vec![
        write_csv(out, "coverage.csv", &hash, &report::coverage_csv(&results)?)?,
        write_csv(out, "size.csv", &hash, &report::size_csv(&results)?)?,
        write_csv(
            out,
            "replications.csv",
            &hash,
            &report::replications_csv(&results)?,
        )?,
        write_json(
            out,
            "summary.json",
            &json!({"config_hash": hash, "seed": seed, "alpha": alpha, "n_rep": n_rep, "cells": cells_json}),
        )?,
    ];
    Ok(Outcome {
        files,
        summary: format!("{} cells x {n_rep} replications", results.len()),
    })
}

fn read_book_file(path: &Path, format: Option<BookFormat>) -> Result<Vec<AuctionBook>> {
    let format = format
        .or_else(|| BookFormat::from_path(path))
        .ok_or_else(|| {
            Error::Argument(format!(
                "{}: cannot tell the format; set format = xml|csv",
                path.display()
            ))
        })?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_books(&bytes, format).map_err(|e| {
        Error::Parse(ParseError::new(
            e.path,
            e.line,
            format!("{}: {}", path.display(), e.message),
        ))
    })
}

/// Books from `input` (a file, or every `.xml`/`.csv` file in a directory)
/// or from the synthetic generator when `synthetic = true`.
pub fn load_books(cfg: &Config, seed: u64) -> Result<Vec<AuctionBook>> {
    let format = match cfg.raw("format").unwrap_or("auto") {
        "auto" => None,
        "xml" => Some(BookFormat::Xml),
        "csv" => Some(BookFormat::Csv),
        other => {
            return Err(Error::Argument(format!(
                "format `{other}` must be auto, xml or csv"
            )))
        }
    };
    let mut books = match (
        cfg.get::<PathBuf>("input")?,
        cfg.get_or("synthetic", false)?,
    ) {
        (Some(_), true) => {
            return Err(Error::Argument(
                "set either `input` or `synthetic = true`, not both".into(),
            ))
        }
        (None, false) => {
            return Err(Error::Argument(
                "no books: set `input` or `synthetic = true`".into(),
            ))
        }
        (None, true) => {
            let defaults = SynthConfig::default();
            generate_books(&SynthConfig {
                days: cfg.get_or("synth_days", defaults.days)?,
                traders: cfg.get_or("synth_traders", defaults.traders)?,
                pipeline_manager: cfg.get_or("synth_pipeline_manager", true)?,
                seed,
                ..defaults
            })?
        }
        (Some(path), false) if path.is_dir() => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&path)
                .map_err(|e| Error::io(&path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| BookFormat::from_path(p).is_some())
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Error::Argument(format!(
                    "{} has no .xml or .csv files",
                    path.display()
                )));
            }
            let mut all = Vec::new();
            for f in files {
                all.extend(read_book_file(&f, format)?);
            }
            all
        }
        (Some(path), false) => read_book_file(&path, format)?,
    };
    if let Some(op) = cfg.raw("drop_operator") {
        books = books.iter().map(|b| b.filter_operator(op, false)).collect();
    }
    books.sort_by_key(|b| b.day);
    Ok(books)
}

fn ingest(cfg: &Config, seed: u64, out: &Path) -> Result<Outcome> {
    let hash = cfg.hash();
    let books = load_books(cfg, seed)?;
    let mut gaps = Vec::new();
    for w in books.windows(2) {
        let days = (w[1].day - w[0].day).num_days();
        if days == 0 {
            return Err(Error::Argument(format!("two books for {}", w[0].day)));
        }
        if days > 1 {
            gaps.push(format!(
                "{}..{}",
                w[0].day.succ_opt().expect("date"),
                w[1].day.pred_opt().expect("date")
            ));
        }
    }
    let orders: usize = books.iter().map(|b| b.orders.len()).sum();
    let files = vec![
        write_csv(out, "books.csv", &hash, &to_csv(&books))?,
        write_json(
            out,
            "ingest.json",
            &json!({
                "config_hash": hash,
                "days": books.len(),
                "orders": orders,
                "first": books.first().map(|b| b.day),
                "last": books.last().map(|b| b.day),
                "gaps": gaps,
            }),
        )?,
    ];
    Ok(Outcome {
        files,
        summary: format!("{} days, {orders} orders", books.len()),
    })
}

fn history_from(cfg: &Config, seed: u64) -> Result<(MarketHistory, WindowConfig)> {
    let books = load_books(cfg, seed)?;
    let defaults = WindowConfig::default();
    let window = WindowConfig {
        window: cfg.get_or("window", defaults.window)?,
        l: cfg.get_or("l", defaults.l)?,
        b: cfg.get_or("b", defaults.b)?,
    };
    window.scheme()?;
    let grid = Grid::new(0.0, cfg.get_or("grid_hi", 2e5)?, cfg.get_or("grid_n", 500)?)?;
    let convention = cfg.get_or("convention", PriceConvention::Crossing)?;
    Ok((MarketHistory::from_books(&books, grid, convention)?, window))
}

fn parse_ranges(cfg: &Config) -> Result<Option<Vec<(f64, f64)>>> {
    let Some(items) = cfg.list::<String>("ranges")? else {
        return Ok(None);
    };
    items
        .iter()
        .map(|r| {
            let (a, b) = r
                .split_once(':')
                .ok_or_else(|| Error::Argument(format!("range `{r}` must be lo:hi")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Argument(format!("range `{r}` must be lo:hi")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(Error::Argument(format!("range `{r}` is empty")));
            }
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn backtest(cfg: &Config, seed: u64, threads: Option<usize>, out: &Path) -> Result<Outcome> {
    let hash = cfg.hash();
    let (history, window) = history_from(cfg, seed)?;
    let defaults = BacktestConfig::default();
    let bc = BacktestConfig {
        window,
        alpha: cfg.get_or("alpha", defaults.alpha)?,
        ranges: parse_ranges(cfg)?.unwrap_or(defaults.ranges),
        threads,
    };
    let report = run_backtest(&history, &bc)?;
    let s = &report.summary;
    let files = vec![
        write_csv(out, "backtest.csv", &hash, &backtest_csv(&report)?)?,
        write_json(
            out,
            "summary.json",
            &json!({"config_hash": hash, "seed": seed, "config": report.config, "summary": report.summary}),
        )?,
    ];
    Ok(Outcome {
        files,
        summary: format!(
            "{} days: band {:.3}, region {:.3}, violations {}",
            s.days, s.band_rate, s.region_rate, s.region_violations
        ),
    })
}

fn precompute_cmd(cfg: &Config, seed: u64, threads: Option<usize>, out: &Path) -> Result<Outcome> {
    let hash = cfg.hash();
    let (history, window) = history_from(cfg, seed)?;
    let alphas = cfg
        .list::<f64>("alphas")?
        .unwrap_or_else(|| vec![0.25, 0.5]);
    let from = cfg.get::<NaiveDate>("from")?;
    let to = cfg.get::<NaiveDate>("to")?;
    let (mut index, days) = precompute(&history, &window, &alphas, from, to, threads)?;
    index.config_hash = Some(hash);
    write_artifacts(out, &index, &days)?;
    Ok(Outcome {
        files: vec![out.join("index.json"), out.join("days")],
        summary: format!("{} days x {} alpha levels", days.len(), alphas.len()),
    })
}
