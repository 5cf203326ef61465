//! How far the calibration scores are from their oracle counterparts as the
//! training set grows (VAR(2) fitted, oracle as reference).
//!
//! cargo run --release --example theorem_diagnostics [replications]

use funcband::simlab::{theorem_diagnostics, DiagnosticsConfig, ModelKind, StudyConfig};

fn main() -> funcband::Result<()> {
    let n_rep = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(50);
    // T = l + 2 + m for m = 15, 90, 950
    for (t_len, l) in [(24, 7), (99, 7), (959, 7)] {
        let mut study = StudyConfig::new(ModelKind::Var(2), t_len, l, 1, 0.25, n_rep);
        study.seed = 5;
        let mut cfg = DiagnosticsConfig::new(study);
        cfg.reference_draws = 20_000;
        let s = theorem_diagnostics(&cfg)?;
        println!(
            "m={:<4} median RMS(R-R*) {:.4}  median |R-R*| at T+1 {:.4}  median sup|F_hat-F| {:.4}",
            s.m, s.median_rms_gap, s.median_target_gap, s.median_sup_gap
        );
    }
    Ok(())
}
