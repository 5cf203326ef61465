//! Rolling-window bands for daily offer/demand curves.
//!
//! Day `t` is predicted from the `window` days before it with the concurrent
//! market model (curve lagged 8 days, price lagged 2 days), monotone-corrected
//! per side. The last `l` days of the window calibrate the band.

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::Serialize;

use super::curve::{build_curves, CurveKind, StepCurve};
use super::equilibrium::{equilibrium, Equilibrium, PriceConvention};
use super::order::AuctionBook;
use super::region::{intersection_region, PredictionRegion, SideBand};
use crate::conformal::{
    calibration_scores, conformal_k, training_modulation, BlockScheme, ScoreSet, SplitPlan,
};
use crate::error::{Error, Result};
use crate::func::{
    band_contains, FunctionalSample, Grid, HalfWidth, ModulationFunction, PredictionBand,
};
use crate::predictors::{ConcurrentPredictor, ConcurrentSpec, MonotoneCorrected, PointPredictor};
use crate::series::FunctionalSeries;
use crate::simlab::with_threads;

/// Quantity grid used for the market curves: 500 points on `[0, 200000]` MWh.
pub fn market_grid() -> Grid {
    Grid::new(0.0, 2e5, 500).expect("valid grid")
}

/// One auction day reduced to what the model needs.
#[derive(Debug, Clone)]
pub struct MarketDay {
    pub day: NaiveDate,
    pub offer: StepCurve,
    pub demand: StepCurve,
    /// Offer (component 0) and demand (component 1) on the grid.
    pub sample: FunctionalSample,
    pub equilibrium: Option<Equilibrium>,
}

/// Consecutive auction days on a common grid.
#[derive(Debug, Clone)]
pub struct MarketHistory {
    grid: Grid,
    convention: PriceConvention,
    days: Vec<MarketDay>,
}

impl MarketHistory {
    /// Sorts the books by day and rejects gaps or duplicate days.
    pub fn from_books(
        books: &[AuctionBook],
        grid: Grid,
        convention: PriceConvention,
    ) -> Result<Self> {
        if books.is_empty() {
            return Err(Error::Argument("no auction books".into()));
        }
        let mut sorted: Vec<&AuctionBook> = books.iter().collect();
        sorted.sort_by_key(|b| b.day);
        let mut gaps = Vec::new();
        for w in sorted.windows(2) {
            let (a, b) = (w[0].day, w[1].day);
            if a == b {
                return Err(Error::Argument(format!("two books for {a}")));
            }
            let next = a + Days::new(1);
            if b != next {
                let last_missing = b - Days::new(1);
                gaps.push(if next == last_missing {
                    next.to_string()
                } else {
                    format!("{next}..{last_missing}")
                });
            }
        }
        if !gaps.is_empty() {
            return Err(Error::MissingDays(gaps.join(", ")));
        }
        let days = sorted
            .into_iter()
            .map(|b| {
                let (offer, demand) = build_curves(b)?;
                let sample = FunctionalSample::on_grid(
                    vec![offer.on_grid(&grid), demand.on_grid(&grid)],
                    grid,
                )?;
                let equilibrium = equilibrium(&offer, &demand, convention);
                Ok(MarketDay {
                    day: b.day,
                    offer,
                    demand,
                    sample,
                    equilibrium,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MarketHistory {
            grid,
            convention,
            days,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn convention(&self) -> PriceConvention {
        self.convention
    }

    pub fn days(&self) -> &[MarketDay] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn index_of(&self, day: NaiveDate) -> Option<usize> {
        self.days.binary_search_by_key(&day, |d| d.day).ok()
    }

    /// Date of index `i`, which may be one past the last observed day.
    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.days[0].day + Days::new(i as u64)
    }

    /// Indices that have a full window behind them.
    pub fn backtest_range(&self, window: &WindowConfig) -> std::ops::Range<usize> {
        window.window.min(self.len())..self.len()
    }

    /// Fits the model on the `window` days before `target` and scores the
    /// calibration days. `target == len()` forecasts the day after the last
    /// observation.
    pub fn fit_day(&self, target: usize, window: &WindowConfig) -> Result<DayFit> {
        let scheme = window.scheme()?;
        let w = window.window;
        if target < w || target > self.len() {
            return Err(Error::Argument(format!(
                "day index {target} needs {w} earlier days and at most {} observed days",
                self.len()
            )));
        }
        let days = &self.days[target - w..target];
        let mut curves: Vec<FunctionalSample> = days.iter().map(|d| d.sample.clone()).collect();
        let mut prices = days
            .iter()
            .map(|d| {
                d.equilibrium.map(|e| e.p).ok_or_else(|| {
                    Error::Argument(format!(
                        "curves do not cross on {}, no price available",
                        d.day
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        // The target slot is never read by the predictor.
        let observed = self.days.get(target);
        curves.push(observed.map_or_else(|| curves[w - 1].clone(), |d| d.sample.clone()));
        prices.push(f64::NAN);
        let data = FunctionalSeries::new(curves)?.with_scalar(prices)?;

        let spec = ConcurrentSpec::market();
        let plan = SplitPlan::contiguous(w, window.l, spec.max_lag())?;
        let inner = ConcurrentPredictor::fit(&data, plan.train(), &spec)?;
        let model = MonotoneCorrected::new(
            inner,
            vec![CurveKind::Offer.direction(), CurveKind::Demand.direction()],
        );
        let modulation = training_modulation(&model, &data, &plan)?;
        let scores = calibration_scores(&model, &data, &plan, &scheme, &modulation)?;
        let center = model.predict(&data, plan.target())?;
        Ok(DayFit {
            day: self.date_at(target),
            grid: self.grid,
            scheme,
            center,
            modulation,
            scores,
            observed: observed.cloned(),
        })
    }
}

/// Rolling window: `window` days, the last `l` of which calibrate, blocks of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowConfig {
    pub window: usize,
    pub l: usize,
    pub b: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window: 90,
            l: 39,
            b: 1,
        }
    }
}

impl WindowConfig {
    pub fn scheme(&self) -> Result<BlockScheme> {
        BlockScheme::new(self.l, self.b)
    }

    /// Training size `m` for the market model.
    pub fn m(&self) -> usize {
        self.window
            .saturating_sub(self.l + ConcurrentSpec::market().max_lag())
    }
}

/// Everything about one day's prediction that does not depend on alpha.
#[derive(Debug, Clone)]
pub struct DayFit {
    pub day: NaiveDate,
    pub grid: Grid,
    pub scheme: BlockScheme,
    pub center: FunctionalSample,
    pub modulation: ModulationFunction,
    pub scores: ScoreSet,
    /// The realised day, absent for a forecast.
    pub observed: Option<MarketDay>,
}

impl DayFit {
    pub fn k(&self, alpha: f64) -> Result<HalfWidth> {
        conformal_k(&self.scores, alpha, self.scheme.l(), self.scheme.b())
    }

    pub fn band(&self, alpha: f64) -> Result<PredictionBand> {
        PredictionBand::new(
            self.center.clone(),
            self.modulation.clone(),
            self.k(alpha)?,
            alpha,
        )
    }

    /// Tightened offer and demand bands, or `None` for an entire-space band.
    pub fn side_bands(&self, alpha: f64) -> Result<Option<(SideBand, SideBand)>> {
        let HalfWidth::Finite(k) = self.k(alpha)? else {
            return Ok(None);
        };
        let side = |j: usize, kind: CurveKind| {
            SideBand::new(
                kind,
                self.center.component(j).to_vec(),
                self.modulation.values(j),
                k,
            )
        };
        Ok(Some((
            side(0, CurveKind::Offer)?,
            side(1, CurveKind::Demand)?,
        )))
    }

    pub fn region(&self, alpha: f64) -> Result<Option<PredictionRegion>> {
        self.side_bands(alpha)?
            .map(|(o, d)| intersection_region(&self.grid, &o, &d))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestConfig {
    pub window: WindowConfig,
    pub alpha: f64,
    /// Quantity ranges over which band sizes are also reported.
    pub ranges: Vec<(f64, f64)>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            window: WindowConfig::default(),
            alpha: 0.25,
            ranges: vec![(0.0, 25_000.0), (25_000.0, 2e5)],
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestRecord {
    pub date: NaiveDate,
    pub k: f64,
    pub band_size_offer: f64,
    pub band_size_demand: f64,
    /// `(offer, demand)` size per configured range.
    pub range_sizes: Vec<(f64, f64)>,
    pub contained_offer: bool,
    pub contained_demand: bool,
    pub contained_band: bool,
    pub contained_region: bool,
    pub region_empty: bool,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "P")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestSummary {
    pub days: usize,
    pub alpha: f64,
    pub nominal: f64,
    pub band_rate: f64,
    pub offer_rate: f64,
    pub demand_rate: f64,
    pub region_rate: f64,
    pub mean_size_offer: f64,
    pub mean_size_demand: f64,
    /// Days whose curves lie in the band but whose equilibrium is outside the region.
    pub region_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub records: Vec<BacktestRecord>,
    pub summary: BacktestSummary,
}

/// Scores one observed day at one alpha.
pub fn evaluate_day(fit: &DayFit, alpha: f64, ranges: &[(f64, f64)]) -> Result<BacktestRecord> {
    let observed = fit
        .observed
        .as_ref()
        .ok_or_else(|| Error::Argument(format!("{} has no observed curves to score", fit.day)))?;
    let band = fit.band(alpha)?;
    let k = band
        .half_width()
        .finite()
        .ok_or(Error::EntireSpace("backtest band"))?;
    let (offer, demand) = fit.side_bands(alpha)?.expect("finite band");
    let region = intersection_region(&fit.grid, &offer, &demand)?;
    let (lo, hi) = (fit.grid.lo(), fit.grid.hi());
    let range_sizes = ranges
        .iter()
        .map(|&(a, b)| Ok((band.component_size(0, a, b)?, band.component_size(1, a, b)?)))
        .collect::<Result<Vec<_>>>()?;
    let eq = observed.equilibrium;
    Ok(BacktestRecord {
        date: fit.day,
        k,
        band_size_offer: band.component_size(0, lo, hi)?,
        band_size_demand: band.component_size(1, lo, hi)?,
        range_sizes,
        contained_offer: offer.contains(observed.sample.component(0)),
        contained_demand: demand.contains(observed.sample.component(1)),
        contained_band: band_contains(&band, &observed.sample)?,
        contained_region: eq.is_some_and(|e| region.contains(e.q, e.p)),
        region_empty: region.is_empty(),
        q: eq.map(|e| e.q),
        p: eq.map(|e| e.p),
    })
}

/// Predicts and scores every day that has a full window behind it.
pub fn run_backtest(history: &MarketHistory, cfg: &BacktestConfig) -> Result<BacktestReport> {
    let range = history.backtest_range(&cfg.window);
    if range.is_empty() {
        return Err(Error::Argument(format!(
            "{} days of history, need more than {}",
            history.len(),
            cfg.window.window
        )));
    }
    let results: Vec<Result<BacktestRecord>> = with_threads(cfg.threads, || {
        range
            .into_par_iter()
            .map(|t| {
                let fit = history.fit_day(t, &cfg.window)?;
                evaluate_day(&fit, cfg.alpha, &cfg.ranges)
            })
            .collect()
    })?;
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, cfg.alpha, &cfg.window)?;
    Ok(BacktestReport {
        config: cfg.clone(),
        records,
        summary,
    })
}

fn summarize(
    records: &[BacktestRecord],
    alpha: f64,
    window: &WindowConfig,
) -> Result<BacktestSummary> {
    let n = records.len() as f64;
    let rate = |f: fn(&BacktestRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / n;
    let mean = |f: fn(&BacktestRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Ok(BacktestSummary {
        days: records.len(),
        alpha,
        nominal: crate::conformal::exact_iid_coverage(window.l, window.b, alpha)?,
        band_rate: rate(|r| r.contained_band),
        offer_rate: rate(|r| r.contained_offer),
        demand_rate: rate(|r| r.contained_demand),
        region_rate: rate(|r| r.contained_region),
        mean_size_offer: mean(|r| r.band_size_offer),
        mean_size_demand: mean(|r| r.band_size_demand),
        region_violations: records
            .iter()
            .filter(|r| r.contained_band && !r.contained_region)
            .count(),
    })
}

fn range_label(a: f64, b: f64) -> String {
    format!("{}_{}", a.round() as i64, b.round() as i64)
}

/// Per-day CSV followed by a commented summary block.
pub fn backtest_csv(report: &BacktestReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "date",
        "k",
        "band_size_offer",
        "band_size_demand",
        "contained_band",
        "contained_region",
        "Q",
        "P",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for &(a, b) in &report.config.ranges {
        header.push(format!("size_offer_{}", range_label(a, b)));
        header.push(format!("size_demand_{}", range_label(a, b)));
    }
    let csv_err = |e: csv::Error| Error::Argument(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.records {
        let mut row = vec![
            r.date.to_string(),
            r.k.to_string(),
            r.band_size_offer.to_string(),
            r.band_size_demand.to_string(),
            u8::from(r.contained_band).to_string(),
            u8::from(r.contained_region).to_string(),
            opt(r.q),
            opt(r.p),
        ];
        for (o, d) in &r.range_sizes {
            row.push(o.to_string());
            row.push(d.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let mut out = String::from_utf8(
        w.into_inner()
            .map_err(|e| Error::Argument(format!("csv: {e}")))?,
    )
    .expect("utf-8");
    let s = &report.summary;
    out.push_str(&format!(
        "# summary days={} alpha={} nominal={:.4} band_rate={:.4} offer_rate={:.4} demand_rate={:.4} region_rate={:.4} mean_size_offer={:.6e} mean_size_demand={:.6e} region_violations={}\n",
        s.days,
        s.alpha,
        s.nominal,
        s.band_rate,
        s.offer_rate,
        s.demand_rate,
        s.region_rate,
        s.mean_size_offer,
        s.mean_size_demand,
        s.region_violations
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::synth::{generate_books, SynthConfig};

    fn history(days: usize) -> MarketHistory {
        let books = generate_books(&SynthConfig {
            days,
            ..SynthConfig::default()
        })
        .unwrap();
        MarketHistory::from_books(&books, market_grid(), PriceConvention::Crossing).unwrap()
    }

    #[test]
    fn gaps_are_listed() {
        let mut books = generate_books(&SynthConfig {
            days: 10,
            ..SynthConfig::default()
        })
        .unwrap();
        books.remove(7);
        books.remove(3);
        books.remove(3);
        let e = MarketHistory::from_books(&books, market_grid(), PriceConvention::Crossing)
            .unwrap_err();
        assert_eq!(
            e.to_string(),
            "missing days in book history: 2019-01-04..2019-01-05, 2019-01-08"
        );
    }

    #[test]
    fn default_window_trains_on_43_days() {
        assert_eq!(WindowConfig::default().m(), 43);
        assert_eq!(
            WindowConfig::default().scheme().unwrap().min_alpha(),
            1.0 / 40.0
        );
    }

    #[test]
    fn small_backtest_runs_and_region_never_misses_a_contained_day() {
        let h = history(110);
        let report = run_backtest(&h, &BacktestConfig::default()).unwrap();
        assert_eq!(report.records.len(), 20);
        assert_eq!(report.summary.region_violations, 0);
        for r in &report.records {
            assert!(r.k > 0.0 && r.band_size_offer > 0.0);
            assert_eq!(r.contained_band, r.contained_offer && r.contained_demand);
        }
        let csv = backtest_csv(&report).unwrap();
        assert!(csv.starts_with("date,k,band_size_offer,band_size_demand,contained_band,contained_region,Q,P,size_offer_0_25000"));
        assert_eq!(csv.lines().count(), 22);
    }

    #[test]
    fn forecast_day_has_no_observation() {
        let h = history(95);
        let fit = h.fit_day(h.len(), &WindowConfig::default()).unwrap();
        assert!(fit.observed.is_none());
        assert_eq!(fit.day, h.days()[94].day + Days::new(1));
        assert!(fit.region(0.25).unwrap().is_some());
        assert!(fit.side_bands(0.02).unwrap().is_none());
        assert!(evaluate_day(&fit, 0.25, &[]).is_err());
    }
}
