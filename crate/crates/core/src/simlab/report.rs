//! CSV tables of study results: one row per (model, b, T) cell.
//!
//! `coverage.csv` and `size.csv` carry a `cell` column formatted like the
//! published tables, e.g. `0.753[0.737,0.769]`.

use serde::Serialize;

use super::study::StudyResult;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct CoverageRow<'a> {
    model: String,
    b: usize,
    #[serde(rename = "T")]
    t_len: usize,
    l: usize,
    alpha: f64,
    #[serde(rename = "N")]
    n_rep: usize,
    coverage: f64,
    ci99_lo: f64,
    ci99_hi: f64,
    nominal: f64,
    cell: &'a str,
}

#[derive(Serialize)]
struct SizeRow<'a> {
    model: String,
    b: usize,
    #[serde(rename = "T")]
    t_len: usize,
    l: usize,
    alpha: f64,
    #[serde(rename = "N")]
    n_rep: usize,
    q1: f64,
    median: f64,
    q3: f64,
    cell: &'a str,
}

#[derive(Serialize)]
struct ReplicationRow {
    model: String,
    b: usize,
    #[serde(rename = "T")]
    t_len: usize,
    index: usize,
    covered: bool,
    size: f64,
    k: f64,
}

fn to_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Argument(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Argument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn coverage_cell(r: &StudyResult) -> String {
    format!(
        "{:.3}[{:.3},{:.3}]",
        r.coverage, r.coverage_ci99.0, r.coverage_ci99.1
    )
}

pub fn size_cell(r: &StudyResult) -> String {
    format!("{:.3}[{:.3},{:.3}]", r.size.median, r.size.q1, r.size.q3)
}

pub fn coverage_csv(results: &[StudyResult]) -> Result<String> {
    let cells: Vec<String> = results.iter().map(coverage_cell).collect();
    to_string(results.iter().zip(&cells).map(|(r, cell)| {
        let c = &r.config;
        CoverageRow {
            model: c.model.to_string(),
            b: c.b,
            t_len: c.t_len,
            l: c.l,
            alpha: c.alpha,
            n_rep: c.n_rep,
            coverage: r.coverage,
            ci99_lo: r.coverage_ci99.0,
            ci99_hi: r.coverage_ci99.1,
            nominal: 1.0 - c.alpha,
            cell,
        }
    }))
}

pub fn size_csv(results: &[StudyResult]) -> Result<String> {
    let cells: Vec<String> = results.iter().map(size_cell).collect();
    to_string(results.iter().zip(&cells).map(|(r, cell)| {
        let c = &r.config;
        SizeRow {
            model: c.model.to_string(),
            b: c.b,
            t_len: c.t_len,
            l: c.l,
            alpha: c.alpha,
            n_rep: c.n_rep,
            q1: r.size.q1,
            median: r.size.median,
            q3: r.size.q3,
            cell,
        }
    }))
}

pub fn replications_csv(results: &[StudyResult]) -> Result<String> {
    to_string(results.iter().flat_map(|r| {
        r.records.iter().map(|rec| ReplicationRow {
            model: r.config.model.to_string(),
            b: r.config.b,
            t_len: r.config.t_len,
            index: rec.index,
            covered: rec.covered,
            size: rec.size,
            k: rec.k,
        })
    }))
}
