use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dgp::{simulate_with_rng, DgpConfig, SimulatedSeries};
use super::replication_seed;
use crate::conformal::{conformal_band, BlockScheme, SplitPlan};
use crate::error::{Error, Result};
use crate::func::{band_contains, band_size};
use crate::predictors::{
    oracle_predictor, ConcurrentPredictor, ConcurrentSpec, PointPredictor, VarPredictor,
};
use crate::series::FunctionalSeries;

/// The seven point predictors compared in the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Knows the basis and the true lag matrices.
    Oracle,
    /// VAR(r) fitted on basis coefficients.
    Var(usize),
    /// Concurrent FAR(r) fitted pointwise.
    Far(usize),
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Oracle,
        ModelKind::Var(1),
        ModelKind::Var(2),
        ModelKind::Var(3),
        ModelKind::Far(1),
        ModelKind::Far(2),
        ModelKind::Far(3),
    ];

    /// Leading observations consumed as lags; the oracle uses two.
    pub fn lag(self) -> usize {
        match self {
            ModelKind::Oracle => 2,
            ModelKind::Var(r) | ModelKind::Far(r) => r,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Oracle => write!(f, "oracle"),
            ModelKind::Var(r) => write!(f, "var{r}"),
            ModelKind::Far(r) => write!(f, "far{r}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Argument(format!(
                "unknown model `{s}` (expected oracle, varR or farR)"
            ))
        };
        if s == "oracle" {
            return Ok(ModelKind::Oracle);
        }
        let (kind, r) = s.split_at_checked(3).ok_or_else(bad)?;
        let r: usize = r.parse().map_err(|_| bad())?;
        if r == 0 {
            return Err(bad());
        }
        match kind {
            "var" => Ok(ModelKind::Var(r)),
            "far" => Ok(ModelKind::Far(r)),
            _ => Err(bad()),
        }
    }
}

/// Fits `model` on the training indices of `data`.
pub fn build_predictor(
    model: ModelKind,
    dgp: &DgpConfig,
    data: &FunctionalSeries,
    train: &[usize],
) -> Result<Box<dyn PointPredictor>> {
    Ok(match model {
        ModelKind::Oracle => {
            let (p1, p2) = (dgp.psi1(), dgp.psi2());
            Box::new(oracle_predictor(
                dgp.basis()?,
                DMatrix::from_column_slice(3, 3, p1.as_slice()),
                DMatrix::from_column_slice(3, 3, p2.as_slice()),
            )?)
        }
        ModelKind::Var(r) => Box::new(VarPredictor::fit(data, train, r, dgp.basis()?)?),
        ModelKind::Far(r) => Box::new(ConcurrentPredictor::fit(
            data,
            train,
            &ConcurrentSpec::far(r),
        )?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitKind {
    /// Calibration on the last `l` observed times.
    #[default]
    Contiguous,
    /// Calibration on a random `l`-subset, drawn per replication.
    Random,
}

impl FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(SplitKind::Contiguous),
            "random" => Ok(SplitKind::Random),
            _ => Err(Error::Argument(format!(
                "unknown split `{s}` (contiguous or random)"
            ))),
        }
    }
}

/// One cell of the simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub model: ModelKind,
    pub t_len: usize,
    pub l: usize,
    pub b: usize,
    pub alpha: f64,
    pub n_rep: usize,
    pub seed: u64,
    pub split: SplitKind,
    /// Process settings; `t_len` and `seed` here are ignored.
    pub dgp: DgpConfig,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl StudyConfig {
    pub fn new(
        model: ModelKind,
        t_len: usize,
        l: usize,
        b: usize,
        alpha: f64,
        n_rep: usize,
    ) -> Self {
        StudyConfig {
            model,
            t_len,
            l,
            b,
            alpha,
            n_rep,
            seed: 0,
            split: SplitKind::Contiguous,
            dgp: DgpConfig::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<BlockScheme> {
        let scheme = BlockScheme::new(self.l, self.b)?;
        let n = (self.l + 1) / self.b;
        if !(self.alpha >= scheme.min_alpha() - 1e-12 && self.alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha={} outside [b/(l+1), 1) = [{}, 1)",
                self.alpha,
                scheme.min_alpha()
            )));
        }
        let lattice = (self.alpha * n as f64 + 1e-9).floor() / n as f64;
        if (lattice - self.alpha).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "alpha={} is not a multiple of b/(l+1)={}; coverage would not be exactly 1-alpha",
                self.alpha,
                scheme.min_alpha()
            )));
        }
        if self.n_rep == 0 {
            return Err(Error::Argument("replication count N must be >= 1".into()));
        }
        if self.t_len < self.l + self.model.lag() + 1 {
            return Err(Error::Argument(format!(
                "T={} too short for l={} and {} lags",
                self.t_len,
                self.l,
                self.model.lag()
            )));
        }
        let dgp = DgpConfig {
            t_len: self.t_len,
            ..self.dgp.clone()
        };
        dgp.validate()?;
        Ok(scheme)
    }

    /// The process settings used by replication `index`.
    pub fn replication_dgp(&self, index: usize) -> DgpConfig {
        DgpConfig {
            t_len: self.t_len,
            seed: replication_seed(self.seed, index as u64),
            ..self.dgp.clone()
        }
    }

    /// Simulated path and split for replication `index`.
    pub fn replication_data(&self, index: usize) -> Result<(SimulatedSeries, SplitPlan)> {
        let dgp = self.replication_dgp(index);
        let mut rng = ChaCha8Rng::seed_from_u64(dgp.seed);
        let sim = simulate_with_rng(&dgp, &mut rng)?;
        let plan = match self.split {
            SplitKind::Contiguous => SplitPlan::contiguous(self.t_len, self.l, self.model.lag())?,
            SplitKind::Random => SplitPlan::random(self.t_len, self.l, self.model.lag(), &mut rng)?,
        };
        Ok((sim, plan))
    }
}

/// `(b, T, l)` cells of the simulation grid.
pub fn standard_grid() -> Vec<(usize, usize, usize)> {
    vec![
        (1, 25, 7),
        (1, 50, 23),
        (1, 100, 47),
        (1, 1000, 479),
        (3, 50, 23),
        (3, 100, 47),
        (3, 1000, 479),
        (6, 100, 47),
        (6, 1000, 479),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub covered: bool,
    pub size: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub coverage: f64,
    pub coverage_ci99: (f64, f64),
    pub size: Quartiles,
    pub records: Vec<ReplicationRecord>,
}

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wald 99% interval for a binomial proportion, clipped to `[0, 1]`.
pub fn binomial_ci99(p: f64, n: usize) -> (f64, f64) {
    let h = Z99 * (p * (1.0 - p) / n as f64).sqrt();
    ((p - h).max(0.0), (p + h).min(1.0))
}

/// Linear-interpolation sample quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Quartiles {
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
    }
}

/// Runs `f` on `threads` workers, or on the global pool when `None`.
pub(crate) fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Maps `f` over `0..n` in parallel; the lowest failing index wins.
pub(crate) fn par_replications<T: Send>(
    n: usize,
    threads: Option<usize>,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> =
        with_threads(threads, || (0..n).into_par_iter().map(&f).collect())?;
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn run_replication(
    cfg: &StudyConfig,
    scheme: &BlockScheme,
    index: usize,
) -> Result<ReplicationRecord> {
    let (sim, plan) = cfg.replication_data(index)?;
    let fit = build_predictor(cfg.model, &cfg.dgp, &sim.series, plan.train())?;
    let bf = conformal_band(&*fit, &sim.series, &plan, scheme, cfg.alpha)?;
    Ok(ReplicationRecord {
        index,
        covered: band_contains(&bf.band, sim.truth())?,
        size: band_size(&bf.band)?,
        k: bf.band.half_width().finite().unwrap_or(f64::INFINITY),
    })
}

/// Runs `N` independent replications of one study cell.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    let scheme = cfg.validate()?;
    let records = par_replications(cfg.n_rep, cfg.threads, |i| run_replication(cfg, &scheme, i))?;
    let hits = records.iter().filter(|r| r.covered).count();
    let coverage = hits as f64 / records.len() as f64;
    let sizes: Vec<f64> = records.iter().map(|r| r.size).collect();
    Ok(StudyResult {
        config: cfg.clone(),
        coverage,
        coverage_ci99: binomial_ci99(coverage, records.len()),
        size: quartiles(&sizes),
        records,
    })
}
