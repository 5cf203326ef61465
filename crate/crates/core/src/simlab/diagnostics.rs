use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dgp::MvtSampler;
use super::replication_seed;
use super::study::{build_predictor, par_replications, quantile_sorted, ModelKind, StudyConfig};
use crate::conformal::training_modulation;
use crate::error::Result;
use crate::func::{weighted_sup_score, ModulationFunction};

/// Settings for the premise diagnostics of the asymptotic coverage result.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub study: StudyConfig,
    /// Size of the independent oracle-score sample used as the reference CDF.
    pub reference_draws: usize,
}

impl DiagnosticsConfig {
    pub fn new(study: StudyConfig) -> Self {
        DiagnosticsConfig {
            study,
            reference_draws: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRecord {
    pub index: usize,
    /// Root-mean-square of `R - R*` over the scored positions and `T+1`.
    pub rms_gap: f64,
    /// `|R_{T+1} - R*_{T+1}|`.
    pub target_gap: f64,
    /// Kolmogorov distance between the empirical CDF of the calibration
    /// oracle scores and the reference oracle-score CDF.
    pub sup_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSummary {
    pub model: String,
    pub m: usize,
    /// Number of calibration scores entering the empirical CDF.
    pub l_bar: usize,
    pub mean_rms_gap: f64,
    pub median_rms_gap: f64,
    pub mean_target_gap: f64,
    pub median_target_gap: f64,
    pub mean_sup_gap: f64,
    pub median_sup_gap: f64,
    #[serde(skip)]
    pub records: Vec<DiagnosticRecord>,
}

/// Two-sample Kolmogorov distance between sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Compares the scores `R` of the fitted model with the oracle scores `R*`
/// that use the true regression function and the same modulation.
///
/// The modulation is divided by `√m` so that its scale settles as `m` grows.
pub fn diagnose_replication(cfg: &DiagnosticsConfig, index: usize) -> Result<DiagnosticRecord> {
    let study = &cfg.study;
    let scheme = study.validate()?;
    let (sim, plan) = study.replication_data(index)?;
    let fit = build_predictor(study.model, &study.dgp, &sim.series, plan.train())?;
    let oracle = build_predictor(ModelKind::Oracle, &study.dgp, &sim.series, plan.train())?;
    let s =
        training_modulation(&*fit, &sim.series, &plan)?.scaled(1.0 / (plan.m() as f64).sqrt())?;

    let mut sq = 0.0;
    let mut target_gap = 0.0;
    let mut calib_oracle = Vec::new();
    for &d in scheme.d_set() {
        let t = plan.omega(d);
        let y = sim.series.require_curve(t, t)?;
        let r = weighted_sup_score(y, &fit.predict(&sim.series, t)?, &s)?;
        let r_star = weighted_sup_score(y, &oracle.predict(&sim.series, t)?, &s)?;
        sq += (r - r_star).powi(2);
        if t == plan.target() {
            target_gap = (r - r_star).abs();
        } else {
            calib_oracle.push(r_star);
        }
    }
    let rms_gap = (sq / scheme.d_set().len() as f64).sqrt();

    calib_oracle.sort_by(f64::total_cmp);
    let mut reference = reference_scores(cfg, &s, index)?;
    reference.sort_by(f64::total_cmp);
    Ok(DiagnosticRecord {
        index,
        rms_gap,
        target_gap,
        sup_gap: ks_distance(&calib_oracle, &reference),
    })
}

/// Fresh oracle scores `sup_q |g'(q)ε| / s(q)` from independent innovations.
fn reference_scores(
    cfg: &DiagnosticsConfig,
    s: &ModulationFunction,
    index: usize,
) -> Result<Vec<f64>> {
    let dgp = &cfg.study.dgp;
    let basis = dgp.basis()?;
    let sampler = MvtSampler::new(dgp.df, dgp.sigma)?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(replication_seed(cfg.study.seed ^ 0x5eed_d1a6, index as u64));
    let w = s.values(0);
    let g: Vec<[f64; 3]> = (0..basis.grid().len())
        .map(|i| {
            [
                basis.function(0)[i],
                basis.function(1)[i],
                basis.function(2)[i],
            ]
        })
        .collect();
    Ok((0..cfg.reference_draws)
        .map(|_| {
            let e = sampler.sample(&mut rng);
            g.iter()
                .zip(w)
                .map(|(gi, wi)| (gi[0] * e[0] + gi[1] * e[1] + gi[2] * e[2]).abs() / wi)
                .fold(0.0, f64::max)
        })
        .collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

pub fn theorem_diagnostics(cfg: &DiagnosticsConfig) -> Result<DiagnosticSummary> {
    let scheme = cfg.study.validate()?;
    let records = par_replications(cfg.study.n_rep, cfg.study.threads, |i| {
        diagnose_replication(cfg, i)
    })?;
    let rms: Vec<f64> = records.iter().map(|r| r.rms_gap).collect();
    let tgt: Vec<f64> = records.iter().map(|r| r.target_gap).collect();
    let sup: Vec<f64> = records.iter().map(|r| r.sup_gap).collect();
    Ok(DiagnosticSummary {
        model: cfg.study.model.to_string(),
        m: cfg.study.t_len - cfg.study.l - cfg.study.model.lag(),
        l_bar: scheme.n_perms() - 1,
        mean_rms_gap: mean(&rms),
        median_rms_gap: median(&rms),
        mean_target_gap: mean(&tgt),
        median_target_gap: median(&tgt),
        mean_sup_gap: mean(&sup),
        median_sup_gap: median(&sup),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: ModelKind, t_len: usize, l: usize, n_rep: usize) -> DiagnosticsConfig {
        let mut study = StudyConfig::new(model, t_len, l, 1, 0.25, n_rep);
        study.seed = 11;
        DiagnosticsConfig {
            study,
            reference_draws: 2000,
        }
    }

    #[test]
    fn ks_distance_hand_values() {
        assert_eq!(ks_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_distance(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_eq!(ks_distance(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
    }

    #[test]
    fn oracle_scores_coincide_for_the_oracle_model() {
        let s = theorem_diagnostics(&cfg(ModelKind::Oracle, 30, 7, 4)).unwrap();
        assert_eq!(s.mean_rms_gap, 0.0);
        assert_eq!(s.mean_target_gap, 0.0);
        assert_eq!(s.m, 21);
        assert_eq!(s.l_bar, 7);
    }

    #[test]
    fn fitted_model_has_positive_gap() {
        let s = theorem_diagnostics(&cfg(ModelKind::Var(2), 30, 7, 4)).unwrap();
        assert!(s.mean_rms_gap > 0.0);
        assert!((0.0..=1.0).contains(&s.mean_sup_gap));
    }
}
