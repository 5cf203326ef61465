//! Precomputed band artifacts: `index.json` plus one `days/<date>.json` per day.
//!
//! The service only reads these; all fitting happens in [`precompute`].

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::func::{band_contains, Grid, HalfWidth};
use crate::market::{
    Equilibrium, MarketHistory, PriceConvention, SideBand, StepCurve, WindowConfig,
};
use crate::simlab::with_threads;

pub const FORMAT_VERSION: u32 = 1;

/// Rounds to 9 significant digits, the precision of every stored or served number.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Applies [`round_sig`] to every float in a JSON tree.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.lo, self.hi, self.n)
    }
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        GridSpec {
            lo: g.lo(),
            hi: g.hi(),
            n: g.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactIndex {
    pub format: u32,
    pub config_hash: Option<String>,
    pub window: usize,
    pub l: usize,
    pub b: usize,
    pub convention: PriceConvention,
    pub grid: GridSpec,
    pub alphas: Vec<f64>,
    pub days: Vec<NaiveDate>,
}

impl ArtifactIndex {
    /// Smallest alpha with a finite band, `b/(l+1)`.
    pub fn min_alpha(&self) -> f64 {
        self.b as f64 / (self.l + 1) as f64
    }
}

/// The realised day: exact step curves, their grid values and the equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedDay {
    pub offer_curve: StepCurve,
    pub demand_curve: StepCurve,
    pub offer: Vec<f64>,
    pub demand: Vec<f64>,
    pub equilibrium: Option<Equilibrium>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBands {
    pub alpha: f64,
    pub k: f64,
    pub offer: SideBand,
    pub demand: SideBand,
    /// Whether the observed curves lie in the (joint) band.
    pub contained: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayArtifact {
    pub day: NaiveDate,
    pub observed: Option<ObservedDay>,
    pub bands: Vec<AlphaBands>,
}

impl DayArtifact {
    pub fn at_alpha(&self, alpha: f64) -> Option<&AlphaBands> {
        self.bands
            .iter()
            .find(|b| (b.alpha - alpha).abs() <= 1e-9 * alpha.max(1.0))
    }
}

/// Artifact days: every backtestable day plus the forecast for the day after
/// the last observation, restricted to `[from, to]` when given.
pub fn precompute(
    history: &MarketHistory,
    window: &WindowConfig,
    alphas: &[f64],
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
    threads: Option<usize>,
) -> Result<(ArtifactIndex, Vec<DayArtifact>)> {
    let scheme = window.scheme()?;
    if alphas.is_empty() {
        return Err(Error::Argument("no alpha levels to precompute".into()));
    }
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) || a + 1e-12 < scheme.min_alpha() {
            return Err(Error::Argument(format!(
                "alpha {a} is outside [b/(l+1), 1) = [{}, 1)",
                scheme.min_alpha()
            )));
        }
    }
    let targets: Vec<usize> = (window.window..=history.len())
        .filter(|&t| {
            let d = history.date_at(t);
            from.is_none_or(|f| d >= f) && to.is_none_or(|e| d <= e)
        })
        .collect();
    if targets.is_empty() {
        return Err(Error::Argument(format!(
            "no day in the requested range has {} days of history before it",
            window.window
        )));
    }
    let artifacts: Vec<Result<DayArtifact>> = with_threads(threads, || {
        targets
            .par_iter()
            .map(|&t| day_artifact(history, window, alphas, t))
            .collect()
    })?;
    let artifacts = artifacts.into_iter().collect::<Result<Vec<_>>>()?;
    let index = ArtifactIndex {
        format: FORMAT_VERSION,
        config_hash: None,
        window: window.window,
        l: window.l,
        b: window.b,
        convention: history.convention(),
        grid: GridSpec::from(history.grid()),
        alphas: alphas.iter().copied().map(round_sig).collect(),
        days: artifacts.iter().map(|a| a.day).collect(),
    };
    Ok((index, artifacts))
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round_sig).collect()
}

fn rounded_band(b: SideBand) -> SideBand {
    SideBand {
        center: rounded(&b.center),
        lower: rounded(&b.lower),
        upper: rounded(&b.upper),
        ..b
    }
}

fn day_artifact(
    history: &MarketHistory,
    window: &WindowConfig,
    alphas: &[f64],
    t: usize,
) -> Result<DayArtifact> {
    let fit = history.fit_day(t, window)?;
    let mut bands = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let HalfWidth::Finite(k) = fit.k(alpha)? else {
            return Err(Error::EntireSpace("precomputed band"));
        };
        let (offer, demand) = fit.side_bands(alpha)?.expect("finite band");
        let contained = fit
            .observed
            .as_ref()
            .map(|o| band_contains(&fit.band(alpha)?, &o.sample))
            .transpose()?;
        bands.push(AlphaBands {
            alpha: round_sig(alpha),
            k: round_sig(k),
            offer: rounded_band(offer),
            demand: rounded_band(demand),
            contained,
        });
    }
    let observed = fit.observed.map(|o| ObservedDay {
        offer: rounded(o.sample.component(0)),
        demand: rounded(o.sample.component(1)),
        offer_curve: o.offer,
        demand_curve: o.demand,
        equilibrium: o.equilibrium,
    });
    Ok(DayArtifact {
        day: fit.day,
        observed,
        bands,
    })
}

fn day_path(dir: &Path, day: NaiveDate) -> std::path::PathBuf {
    dir.join("days").join(format!("{day}.json"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut v =
        serde_json::to_value(value).map_err(|e| Error::Argument(format!("serialize: {e}")))?;
    round_json(&mut v);
    let text = serde_json::to_string(&v).map_err(|e| Error::Argument(format!("serialize: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the index and the day files under `dir`.
pub fn write_artifacts(dir: &Path, index: &ArtifactIndex, days: &[DayArtifact]) -> Result<()> {
    let days_dir = dir.join("days");
    std::fs::create_dir_all(&days_dir).map_err(|e| Error::io(&days_dir, e))?;
    for d in days {
        write_json(&day_path(dir, d.day), d)?;
    }
    write_json(&dir.join("index.json"), index)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))
}

/// Read-only artifacts loaded into memory.
#[derive(Debug, Clone)]
pub struct ArtifactStore {
    index: ArtifactIndex,
    grid: Grid,
    days: BTreeMap<NaiveDate, DayArtifact>,
}

impl ArtifactStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let index: ArtifactIndex = read_json(&dir.join("index.json"))?;
        let days = index
            .days
            .iter()
            .map(|d| Ok((*d, read_json(&day_path(dir, *d))?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::from_parts(index, days.into_values().collect())
    }

    pub fn from_parts(index: ArtifactIndex, days: Vec<DayArtifact>) -> Result<Self> {
        if index.format != FORMAT_VERSION {
            return Err(Error::Argument(format!(
                "artifact format {} is not supported (expected {FORMAT_VERSION})",
                index.format
            )));
        }
        let grid = index.grid.grid()?;
        let days: BTreeMap<NaiveDate, DayArtifact> = days.into_iter().map(|d| (d.day, d)).collect();
        for d in &index.days {
            let a = days.get(d).ok_or_else(|| {
                Error::Argument(format!("index lists {d} but it has no artifact"))
            })?;
            if a.bands.iter().any(|b| b.offer.center.len() != grid.len()) {
                return Err(Error::Shape(format!(
                    "artifact for {d} does not match the grid"
                )));
            }
        }
        Ok(ArtifactStore { index, grid, days })
    }

    pub fn index(&self) -> &ArtifactIndex {
        &self.index
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn day(&self, day: NaiveDate) -> Option<&DayArtifact> {
        self.days.get(&day)
    }
}
