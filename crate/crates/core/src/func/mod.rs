//! Grid-based multivariate functional data.
//!
//! A curve is stored as its values on a fixed equispaced grid, endpoints
//! included. Suprema over the domain become maxima over grid points and
//! integrals use the composite trapezoidal rule.

mod band;
pub mod columnar;

pub use band::{band_contains, band_size, HalfWidth, PredictionBand};

use crate::error::{Error, Result};

/// Equispaced evaluation grid on `[lo, hi]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Argument(format!(
                "grid domain must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::Argument(format!(
                "grid needs n >= 2 points, got {n}"
            )));
        }
        Ok(Grid { lo, hi, n })
    }

    /// The unit interval with `n` points.
    pub fn unit(n: usize) -> Result<Self> {
        Grid::new(0.0, 1.0, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Index of the grid point nearest to `q` (clamped to the domain).
    pub fn nearest(&self, q: f64) -> usize {
        let pos = ((q - self.lo) / self.spacing()).round();
        pos.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Trapezoidal integral of grid values over the whole domain.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let h = self.spacing();
        let inner: f64 = values[1..self.n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    /// Integral over `[a, b]` of the piecewise-linear interpolant of `values`.
    ///
    /// The range is clipped to the grid domain; an empty intersection yields 0.
    pub fn integrate_range(&self, values: &[f64], a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if a >= b {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..self.n - 1 {
            let (x0, x1) = (self.point(i), self.point(i + 1));
            let (lo, hi) = (a.max(x0), b.min(x1));
            if lo >= hi {
                continue;
            }
            let slope = (values[i + 1] - values[i]) / (x1 - x0);
            let f_lo = values[i] + slope * (lo - x0);
            let f_hi = values[i] + slope * (hi - x0);
            total += 0.5 * (f_lo + f_hi) * (hi - lo);
        }
        total
    }

    /// Linear interpolation of grid values at an arbitrary `q`, flat outside the domain.
    pub fn interpolate(&self, values: &[f64], q: f64) -> f64 {
        if q <= self.lo {
            return values[0];
        }
        if q >= self.hi {
            return values[self.n - 1];
        }
        let pos = (q - self.lo) / self.spacing();
        let i = (pos.floor() as usize).min(self.n - 2);
        let w = pos - i as f64;
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}

/// One realization of a `p`-component random function, each component on its own grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    components: Vec<Vec<f64>>,
    grids: Vec<Grid>,
}

impl FunctionalSample {
    pub fn new(components: Vec<Vec<f64>>, grids: Vec<Grid>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Argument(
                "a functional sample needs p >= 1 components".into(),
            ));
        }
        if components.len() != grids.len() {
            return Err(Error::Shape(format!(
                "{} components but {} grids",
                components.len(),
                grids.len()
            )));
        }
        for (j, (c, g)) in components.iter().zip(&grids).enumerate() {
            if c.len() != g.len() {
                return Err(Error::Shape(format!(
                    "component {j} has {} values on a {}-point grid",
                    c.len(),
                    g.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Argument(format!(
                    "component {j} has a non-finite value at grid index {i}"
                )));
            }
        }
        Ok(FunctionalSample { components, grids })
    }

    /// Univariate curve.
    pub fn univariate(values: Vec<f64>, grid: Grid) -> Result<Self> {
        Self::new(vec![values], vec![grid])
    }

    /// Several components sharing one grid.
    pub fn on_grid(components: Vec<Vec<f64>>, grid: Grid) -> Result<Self> {
        let p = components.len();
        Self::new(components, vec![grid; p])
    }

    pub fn zeros(grids: &[Grid]) -> Self {
        FunctionalSample {
            components: grids.iter().map(|g| vec![0.0; g.len()]).collect(),
            grids: grids.to_vec(),
        }
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn grid(&self, j: usize) -> &Grid {
        &self.grids[j]
    }

    pub fn grids(&self) -> &[Grid] {
        &self.grids
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.components
    }

    pub fn same_shape(&self, other: &FunctionalSample) -> bool {
        self.grids == other.grids
    }

    pub(crate) fn check_shape(&self, other: &FunctionalSample, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: grids {:?} vs {:?}",
                self.grids, other.grids
            )))
        }
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &FunctionalSample) -> Result<FunctionalSample> {
        self.check_shape(other, "difference")?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(FunctionalSample {
            components,
            grids: self.grids.clone(),
        })
    }

    /// Applies `f` to every component, keeping the grids.
    pub fn map_components<F>(&self, mut f: F) -> Result<FunctionalSample>
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(j, c)| f(j, c))
            .collect();
        FunctionalSample::new(components, self.grids.clone())
    }

    /// Sup-norm over all components and grid points.
    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Pointwise scale used to modulate band width, floored strictly above zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationFunction {
    values: Vec<Vec<f64>>,
    grids: Vec<Grid>,
    floor: f64,
}

impl ModulationFunction {
    /// Builds a modulation from raw values, flooring everything at `floor`.
    pub fn new(values: Vec<Vec<f64>>, grids: Vec<Grid>, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::Argument(format!(
                "modulation floor must be positive, got {floor}"
            )));
        }
        let sample = FunctionalSample::new(values, grids)?;
        if sample.components.iter().flatten().any(|v| *v < 0.0) {
            return Err(Error::Argument(
                "modulation values must be nonnegative".into(),
            ));
        }
        let values = sample
            .components
            .into_iter()
            .map(|c| c.into_iter().map(|v| v.max(floor)).collect())
            .collect();
        Ok(ModulationFunction {
            values,
            grids: sample.grids,
            floor,
        })
    }

    /// Constant modulation `c` on the given grids.
    pub fn constant(grids: &[Grid], c: f64) -> Result<Self> {
        let values = grids.iter().map(|g| vec![c; g.len()]).collect();
        let floor = 1e-12 * if c > 0.0 { c } else { 1.0 };
        ModulationFunction::new(values, grids.to_vec(), floor)
    }

    pub fn values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn grids(&self) -> &[Grid] {
        &self.grids
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// The same function multiplied by `lambda > 0` (floor included).
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "scale must be positive, got {lambda}"
            )));
        }
        Ok(ModulationFunction {
            values: self
                .values
                .iter()
                .map(|c| c.iter().map(|v| v * lambda).collect())
                .collect(),
            grids: self.grids.clone(),
            floor: self.floor * lambda,
        })
    }

    fn check_shape(&self, y: &FunctionalSample) -> Result<()> {
        if self.grids.as_slice() == y.grids() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "modulation grids {:?} vs sample grids {:?}",
                self.grids,
                y.grids()
            )))
        }
    }
}

/// Nonconformity score: the largest modulated absolute residual over all
/// components and grid points.
pub fn weighted_sup_score(
    y: &FunctionalSample,
    center: &FunctionalSample,
    s: &ModulationFunction,
) -> Result<f64> {
    y.check_shape(center, "score")?;
    s.check_shape(y)?;
    let mut score = 0.0_f64;
    for j in 0..y.p() {
        for ((a, b), w) in y.components[j]
            .iter()
            .zip(&center.components[j])
            .zip(&s.values[j])
        {
            score = score.max((a - b).abs() / w);
        }
    }
    Ok(score)
}

/// Root-sum-of-squares of training residuals, pointwise, floored.
///
/// No division by the number of residuals: bands are invariant to a positive
/// rescaling of the modulation, so the normalization does not matter.
pub fn modulation_from_residuals(residuals: &[FunctionalSample]) -> Result<ModulationFunction> {
    let first = residuals
        .first()
        .ok_or_else(|| Error::Argument("modulation needs at least one residual sample".into()))?;
    let mut sums: Vec<Vec<f64>> = first.grids.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut max_abs = 0.0_f64;
    for r in residuals {
        r.check_shape(first, "residuals")?;
        for (acc, c) in sums.iter_mut().zip(&r.components) {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v * v;
                max_abs = max_abs.max(v.abs());
            }
        }
    }
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let values = sums
        .into_iter()
        .map(|c| c.into_iter().map(f64::sqrt).collect())
        .collect();
    ModulationFunction::new(values, first.grids.clone(), 1e-12 * scale)
}
