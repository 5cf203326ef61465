use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{least_squares, Basis, PointPredictor};
use crate::error::{Error, ParseError, Result};
use crate::func::FunctionalSample;
use crate::series::FunctionalSeries;

/// Lag matrices `Ψ_1, ..., Ψ_r` of a VAR(r) without intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    matrices: Vec<DMatrix<f64>>,
}

impl VarCoefficients {
    pub fn new(matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = matrices
            .first()
            .ok_or_else(|| Error::Argument("VAR needs at least one lag matrix".into()))?
            .nrows();
        for m in &matrices {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Shape(format!("lag matrices must all be {d}x{d}")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument("VAR coefficients must be finite".into()));
            }
        }
        Ok(VarCoefficients { matrices })
    }

    pub fn order(&self) -> usize {
        self.matrices.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrix(&self, i: usize) -> &DMatrix<f64> {
        &self.matrices[i - 1]
    }

    /// `Σ_i Ψ_i ȳ_{t-i}`, with `lagged[0] = ȳ_{t-1}`.
    pub fn step(&self, lagged: &[DVector<f64>]) -> Result<DVector<f64>> {
        if lagged.len() < self.order() {
            return Err(Error::Argument(format!(
                "VAR({}) needs {} lag vectors, got {}",
                self.order(),
                self.order(),
                lagged.len()
            )));
        }
        let mut out = DVector::zeros(self.dim());
        for (m, y) in self.matrices.iter().zip(lagged) {
            out += m * y;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("coef var {} {}\n", self.order(), self.dim());
        for m in &self.matrices {
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(s, "{}", cells.join(" ")).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| ParseError::new("header", Some(1), "empty input"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || ParseError::new("header", Some(1), "expected `coef var <r> <d>`");
        if h.len() != 4 || h[0] != "coef" || h[1] != "var" {
            return Err(bad_header());
        }
        let r: usize = h[2].parse().map_err(|_| bad_header())?;
        let d: usize = h[3].parse().map_err(|_| bad_header())?;
        let mut matrices = Vec::with_capacity(r);
        for i in 0..r {
            let mut vals = Vec::with_capacity(d * d);
            for row in 0..d {
                let path = format!("matrix[{i}]/row[{row}]");
                let (ln, line) = lines
                    .next()
                    .ok_or_else(|| ParseError::new(&path, None, "missing row"))?;
                let nums: Vec<f64> = line
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| ParseError::new(&path, Some(ln + 1), "non-numeric value"))?;
                if nums.len() != d {
                    return Err(ParseError::new(
                        &path,
                        Some(ln + 1),
                        format!("expected {d} values"),
                    ));
                }
                vals.extend(nums);
            }
            matrices.push(DMatrix::from_row_slice(d, d, &vals));
        }
        VarCoefficients::new(matrices)
            .map_err(|e| ParseError::new("coefficients", None, e.to_string()))
    }
}

/// Least-squares VAR(r) fit.
///
/// `coefs[t-1]` is the coefficient vector at time `t`; `targets` lists the
/// (1-based) response times, each of which needs its `r` lags available.
pub fn fit_var(coefs: &[DVector<f64>], targets: &[usize], r: usize) -> Result<VarCoefficients> {
    if r == 0 {
        return Err(Error::Argument("VAR order must be >= 1".into()));
    }
    if targets.len() < r + 1 {
        return Err(Error::Argument(format!(
            "VAR({r}) needs at least {} training observations, got {}",
            r + 1,
            targets.len()
        )));
    }
    let d = coefs
        .first()
        .ok_or_else(|| Error::Argument("empty coefficient series".into()))?
        .len();
    let mut x = DMatrix::zeros(targets.len(), d * r);
    let mut y = DMatrix::zeros(targets.len(), d);
    for (row, &t) in targets.iter().enumerate() {
        if t <= r || t > coefs.len() {
            return Err(Error::Unavailable {
                t,
                reason: format!("VAR({r}) lags or response outside the series"),
            });
        }
        y.row_mut(row).copy_from(&coefs[t - 1].transpose());
        for i in 1..=r {
            x.view_mut((row, (i - 1) * d), (1, d))
                .copy_from(&coefs[t - 1 - i].transpose());
        }
    }
    let b = least_squares(x, y, &format!(" (VAR({r}) design)"))?;
    let matrices = (0..r)
        .map(|i| b.view((i * d, 0), (d, d)).transpose())
        .collect();
    VarCoefficients::new(matrices)
}

/// Curve `g'(q) Σ Ψ_i ȳ_{t-i}` on the basis grid.
pub fn predict_var(
    coef: &VarCoefficients,
    lagged: &[DVector<f64>],
    basis: &Basis,
) -> Result<FunctionalSample> {
    if coef.dim() != basis.dim() {
        return Err(Error::Shape(format!(
            "VAR dimension {} vs basis dimension {}",
            coef.dim(),
            basis.dim()
        )));
    }
    let c = coef.step(lagged)?;
    FunctionalSample::univariate(basis.expand(&c), *basis.grid())
}

/// VAR point predictor on basis coefficients of a univariate functional series.
#[derive(Debug, Clone)]
pub struct VarPredictor {
    coef: VarCoefficients,
    basis: Basis,
}

impl VarPredictor {
    pub fn new(coef: VarCoefficients, basis: Basis) -> Self {
        VarPredictor { coef, basis }
    }

    /// Fits VAR(r) on the coefficients of the curves at `train` times.
    pub fn fit(data: &FunctionalSeries, train: &[usize], r: usize, basis: Basis) -> Result<Self> {
        let last = train.iter().copied().max().unwrap_or(0).min(data.len());
        let coefs: Vec<DVector<f64>> = data.curves()[..last]
            .iter()
            .map(|c| basis.project(c.component(0)))
            .collect();
        Ok(VarPredictor {
            coef: fit_var(&coefs, train, r)?,
            basis,
        })
    }

    pub fn coefficients(&self) -> &VarCoefficients {
        &self.coef
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }
}

impl PointPredictor for VarPredictor {
    fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample> {
        let lagged = (1..=self.coef.order())
            .map(|i| {
                let lag = t
                    .checked_sub(i)
                    .filter(|&s| s >= 1)
                    .ok_or(Error::Unavailable {
                        t,
                        reason: format!("lag {i} precedes the series start"),
                    })?;
                Ok(self.basis.project(data.require_curve(lag, t)?.component(0)))
            })
            .collect::<Result<Vec<_>>>()?;
        predict_var(&self.coef, &lagged, &self.basis)
    }
}

/// Predictor that knows both the basis and the true VAR(2) matrices.
pub fn oracle_predictor(
    basis: Basis,
    psi1: DMatrix<f64>,
    psi2: DMatrix<f64>,
) -> Result<VarPredictor> {
    Ok(VarPredictor::new(
        VarCoefficients::new(vec![psi1, psi2])?,
        basis,
    ))
}
