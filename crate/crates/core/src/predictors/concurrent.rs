use nalgebra::DMatrix;

use super::{min_norm_least_squares, PointPredictor};
use crate::error::{Error, ParseError, Result};
use crate::func::{columnar, FunctionalSample, Grid};
use crate::series::FunctionalSeries;

/// Regressors of a concurrent functional model: the response at `q` is
/// regressed on lagged curves at the same `q` and on lagged scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcurrentSpec {
    pub curve_lags: Vec<usize>,
    pub scalar_lags: Vec<usize>,
    pub intercept: bool,
}

impl ConcurrentSpec {
    /// Concurrent FAR(r): lags `1..=r`, no scalar covariate.
    pub fn far(r: usize) -> Self {
        ConcurrentSpec {
            curve_lags: (1..=r).collect(),
            scalar_lags: Vec::new(),
            intercept: false,
        }
    }

    /// Curve lagged 8 days and price lagged 2 days, no intercept.
    pub fn market() -> Self {
        ConcurrentSpec {
            curve_lags: vec![8],
            scalar_lags: vec![2],
            intercept: false,
        }
    }

    /// Largest lag, i.e. how many leading observations serve only as covariates.
    pub fn max_lag(&self) -> usize {
        self.curve_lags
            .iter()
            .chain(&self.scalar_lags)
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn n_regressors(&self) -> usize {
        self.curve_lags.len() + self.scalar_lags.len() + usize::from(self.intercept)
    }

    fn label(&self) -> String {
        let mut parts: Vec<String> = self.curve_lags.iter().map(|l| format!("y{l}")).collect();
        parts.extend(self.scalar_lags.iter().map(|l| format!("s{l}")));
        if self.intercept {
            parts.push("c".into());
        }
        parts.join(",")
    }

    fn parse_label(label: &str) -> Option<Self> {
        let mut spec = ConcurrentSpec {
            curve_lags: vec![],
            scalar_lags: vec![],
            intercept: false,
        };
        for part in label.split(',') {
            match part.split_at_checked(1)? {
                ("y", n) => spec.curve_lags.push(n.parse().ok()?),
                ("s", n) => spec.scalar_lags.push(n.parse().ok()?),
                ("c", "") => spec.intercept = true,
                _ => return None,
            }
        }
        Some(spec)
    }

    /// Regressor values at grid index `i` of component `j` for time `t`.
    fn row(
        &self,
        data: &FunctionalSeries,
        t: usize,
        j: usize,
        i: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        out.clear();
        for &lag in &self.curve_lags {
            let s = lagged(t, lag)?;
            out.push(data.require_curve(s, t)?.component(j)[i]);
        }
        for &lag in &self.scalar_lags {
            out.push(data.require_scalar(lagged(t, lag)?, t)?);
        }
        if self.intercept {
            out.push(1.0);
        }
        Ok(())
    }
}

fn lagged(t: usize, lag: usize) -> Result<usize> {
    t.checked_sub(lag)
        .filter(|&s| s >= 1)
        .ok_or(Error::Unavailable {
            t,
            reason: format!("lag {lag} precedes the series start"),
        })
}

/// Per-grid-point coefficient vectors for every component.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrentCoefficients {
    spec: ConcurrentSpec,
    grids: Vec<Grid>,
    /// `coef[j][i]` holds the regressor weights at grid index `i` of component `j`.
    coef: Vec<Vec<Vec<f64>>>,
}

impl ConcurrentCoefficients {
    pub fn spec(&self) -> &ConcurrentSpec {
        &self.spec
    }

    pub fn at(&self, j: usize, i: usize) -> &[f64] {
        &self.coef[j][i]
    }

    /// Coefficient function `c` (regressor index) of component `j`.
    pub fn function(&self, j: usize, c: usize) -> Vec<f64> {
        self.coef[j].iter().map(|v| v[c]).collect()
    }

    /// `coef <spec> <p>` header followed by one columnar block per component.
    pub fn to_text(&self) -> Result<String> {
        let mut s = format!(
            "coef concurrent {} {}\n",
            self.spec.label(),
            self.grids.len()
        );
        for (j, g) in self.grids.iter().enumerate() {
            let funcs = (0..self.spec.n_regressors())
                .map(|c| self.function(j, c))
                .collect();
            columnar::write_sample(&mut s, &FunctionalSample::on_grid(funcs, *g)?)?;
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let (header, rest) = text.split_once('\n').unwrap_or((text, ""));
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad = || ParseError::new("header", Some(1), "expected `coef concurrent <spec> <p>`");
        if h.len() != 4 || h[0] != "coef" || h[1] != "concurrent" {
            return Err(bad());
        }
        let spec = ConcurrentSpec::parse_label(h[2]).ok_or_else(bad)?;
        let p: usize = h[3].parse().map_err(|_| bad())?;
        let blocks = columnar::read_series(rest)?;
        if blocks.len() != p {
            return Err(ParseError::new(
                "body",
                None,
                format!("expected {p} blocks, found {}", blocks.len()),
            ));
        }
        let mut grids = Vec::new();
        let mut coef = Vec::new();
        for (j, b) in blocks.iter().enumerate() {
            if b.p() != spec.n_regressors() {
                return Err(ParseError::new(
                    format!("block[{j}]"),
                    None,
                    format!("expected {} coefficient functions", spec.n_regressors()),
                ));
            }
            grids.push(*b.grid(0));
            coef.push(
                (0..b.grid(0).len())
                    .map(|i| (0..b.p()).map(|c| b.component(c)[i]).collect())
                    .collect(),
            );
        }
        Ok(ConcurrentCoefficients { spec, grids, coef })
    }
}

/// Independent (minimum-norm) least squares at every grid point of every component.
pub fn fit_concurrent(
    data: &FunctionalSeries,
    train: &[usize],
    spec: &ConcurrentSpec,
) -> Result<ConcurrentCoefficients> {
    let k = spec.n_regressors();
    if k == 0 {
        return Err(Error::Argument(
            "concurrent model needs at least one regressor".into(),
        ));
    }
    if !spec.scalar_lags.is_empty() && !data.has_scalar() {
        return Err(Error::Argument(
            "model uses a scalar covariate the series lacks".into(),
        ));
    }
    if train.len() < k {
        return Err(Error::Argument(format!(
            "{} training rows for {k} regressors per grid point",
            train.len()
        )));
    }
    let grids = data.grids().to_vec();
    let mut coef = Vec::with_capacity(grids.len());
    let mut row = Vec::with_capacity(k);
    for (j, g) in grids.iter().enumerate() {
        let mut per_q = Vec::with_capacity(g.len());
        for i in 0..g.len() {
            let mut x = DMatrix::zeros(train.len(), k);
            let mut y = DMatrix::zeros(train.len(), 1);
            for (r, &t) in train.iter().enumerate() {
                spec.row(data, t, j, i, &mut row)?;
                for (c, v) in row.iter().enumerate() {
                    x[(r, c)] = *v;
                }
                y[(r, 0)] = data.require_curve(t, t)?.component(j)[i];
            }
            let context = format!(" at q={} (component {j})", g.point(i));
            // Step curves are often constant at a grid point across days (a
            // zero-price offer at q=0, say), so a degenerate design is routine
            // here and gets the minimum-norm fit.
            let b = min_norm_least_squares(x, y, &context)?;
            per_q.push(b.column(0).iter().copied().collect());
        }
        coef.push(per_q);
    }
    Ok(ConcurrentCoefficients {
        spec: spec.clone(),
        grids,
        coef,
    })
}

/// Fitted concurrent model used as a point predictor.
#[derive(Debug, Clone)]
pub struct ConcurrentPredictor {
    coef: ConcurrentCoefficients,
}

impl ConcurrentPredictor {
    pub fn fit(data: &FunctionalSeries, train: &[usize], spec: &ConcurrentSpec) -> Result<Self> {
        Ok(ConcurrentPredictor {
            coef: fit_concurrent(data, train, spec)?,
        })
    }

    pub fn from_coefficients(coef: ConcurrentCoefficients) -> Self {
        ConcurrentPredictor { coef }
    }

    pub fn coefficients(&self) -> &ConcurrentCoefficients {
        &self.coef
    }
}

impl PointPredictor for ConcurrentPredictor {
    fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample> {
        let spec = &self.coef.spec;
        let mut row = Vec::with_capacity(spec.n_regressors());
        let mut comps = Vec::with_capacity(self.coef.grids.len());
        for (j, g) in self.coef.grids.iter().enumerate() {
            let mut vals = Vec::with_capacity(g.len());
            for i in 0..g.len() {
                spec.row(data, t, j, i, &mut row)?;
                vals.push(
                    row.iter()
                        .zip(&self.coef.coef[j][i])
                        .map(|(x, b)| x * b)
                        .sum(),
                );
            }
            comps.push(vals);
        }
        FunctionalSample::new(comps, self.coef.grids.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_from(values: impl Fn(usize, usize) -> f64, len: usize, n: usize) -> FunctionalSeries {
        let g = Grid::unit(n).unwrap();
        let curves = (1..=len)
            .map(|t| {
                FunctionalSample::univariate((0..n).map(|i| values(t, i)).collect(), g).unwrap()
            })
            .collect();
        FunctionalSeries::new(curves).unwrap()
    }

    #[test]
    fn noiseless_ar1_gives_half_everywhere() {
        let data = series_from(|t, i| (1.0 + i as f64) * 0.5_f64.powi(t as i32), 12, 5);
        let train: Vec<usize> = (2..=12).collect();
        let c = fit_concurrent(&data, &train, &ConcurrentSpec::far(1)).unwrap();
        for i in 0..5 {
            assert!((c.at(0, i)[0] - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_series_gives_unit_coefficient() {
        let data = series_from(|_, _| 3.0, 8, 4);
        let train: Vec<usize> = (2..=8).collect();
        let c = fit_concurrent(&data, &train, &ConcurrentSpec::far(1)).unwrap();
        assert!((0..4).all(|i| (c.at(0, i)[0] - 1.0).abs() < 1e-12));
    }

    #[test]
    fn collinear_lags_get_the_minimum_norm_fit() {
        // y_t = y_{t-1}/2 = y_{t-2}/4: any b1 + 2 b2 = 1/2 fits; min norm is (0.1, 0.2)
        let data = series_from(|t, i| (1.0 + i as f64) * 0.5_f64.powi(t as i32), 12, 3);
        let train: Vec<usize> = (3..=12).collect();
        let c = fit_concurrent(&data, &train, &ConcurrentSpec::far(2)).unwrap();
        for i in 0..3 {
            assert!((c.at(0, i)[0] - 0.1).abs() < 1e-9 && (c.at(0, i)[1] - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn scalar_covariate_is_required() {
        let data = series_from(|t, _| t as f64, 12, 3);
        let train: Vec<usize> = (9..=12).collect();
        assert!(fit_concurrent(&data, &train, &ConcurrentSpec::market()).is_err());
    }

    #[test]
    fn coefficient_text_round_trip() {
        let g = Grid::unit(4).unwrap();
        let curves: Vec<_> = (1..=30)
            .map(|t| {
                let a: Vec<f64> = (0..4).map(|i| ((t * 7 + i * 3) % 11) as f64).collect();
                let b: Vec<f64> = (0..4).map(|i| ((t * 5 + i) % 13) as f64 - 6.0).collect();
                FunctionalSample::on_grid(vec![a, b], g).unwrap()
            })
            .collect();
        let prices = (1..=30).map(|t| ((t * 3) % 7) as f64 + 1.0).collect();
        let data = FunctionalSeries::new(curves)
            .unwrap()
            .with_scalar(prices)
            .unwrap();
        let train: Vec<usize> = (9..=30).collect();
        let c = fit_concurrent(&data, &train, &ConcurrentSpec::market()).unwrap();
        let text = c.to_text().unwrap();
        assert!(text.starts_with("coef concurrent y8,s2 2\n"));
        let back = ConcurrentCoefficients::from_text(&text).unwrap();
        for j in 0..2 {
            for i in 0..4 {
                for (a, b) in back.at(j, i).iter().zip(c.at(j, i)) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
        }
    }
}
