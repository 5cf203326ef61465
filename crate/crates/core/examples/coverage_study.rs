//! Empirical coverage and band size for a few cells of the simulation grid.
//!
//! Run with `cargo run --release --example coverage_study -- 1000` to set N.

use funcband::simlab::{report, run_study, ModelKind, StudyConfig};

fn main() -> funcband::Result<()> {
    let n_rep = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200);
    let cells = [
        (ModelKind::Oracle, 25, 7),
        (ModelKind::Oracle, 50, 23),
        (ModelKind::Var(2), 25, 7),
        (ModelKind::Var(2), 50, 23),
        (ModelKind::Far(2), 25, 7),
        (ModelKind::Far(2), 50, 23),
    ];
    let mut results = Vec::new();
    for (model, t_len, l) in cells {
        let mut cfg = StudyConfig::new(model, t_len, l, 1, 0.25, n_rep);
        cfg.seed = 2024;
        let r = run_study(&cfg)?;
        println!(
            "{model:>6} T={t_len:<4} coverage {}  size {}",
            report::coverage_cell(&r),
            report::size_cell(&r)
        );
        results.push(r);
    }
    print!("\n{}", report::coverage_csv(&results)?);
    Ok(())
}
