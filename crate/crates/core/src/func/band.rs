use super::{weighted_sup_score, FunctionalSample, Grid, ModulationFunction};
use crate::error::{Error, Result};

/// Conformal half-width multiplier `k`, or the whole function space when
/// alpha is too small for the calibration set to exclude anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfWidth {
    Finite(f64),
    EntireSpace,
}

impl HalfWidth {
    pub fn finite(self) -> Option<f64> {
        match self {
            HalfWidth::Finite(k) => Some(k),
            HalfWidth::EntireSpace => None,
        }
    }
}

/// The set `{y : |y_j(q) - center_j(q)| <= k * s_j(q) for all j, q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBand {
    center: FunctionalSample,
    modulation: ModulationFunction,
    half_width: HalfWidth,
    alpha: f64,
}

impl PredictionBand {
    pub fn new(
        center: FunctionalSample,
        modulation: ModulationFunction,
        half_width: HalfWidth,
        alpha: f64,
    ) -> Result<Self> {
        if modulation.grids() != center.grids() {
            return Err(Error::Shape(
                "band center and modulation grids differ".into(),
            ));
        }
        if let HalfWidth::Finite(k) = half_width {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Argument(format!(
                    "half-width must be finite and >= 0, got {k}"
                )));
            }
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        Ok(PredictionBand {
            center,
            modulation,
            half_width,
            alpha,
        })
    }

    pub fn center(&self) -> &FunctionalSample {
        &self.center
    }

    pub fn modulation(&self) -> &ModulationFunction {
        &self.modulation
    }

    pub fn half_width(&self) -> HalfWidth {
        self.half_width
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_entire_space(&self) -> bool {
        self.half_width == HalfWidth::EntireSpace
    }

    pub fn p(&self) -> usize {
        self.center.p()
    }

    pub fn grid(&self, j: usize) -> &Grid {
        self.center.grid(j)
    }

    /// Lower and upper bound of component `j`; `None` for an entire-space band.
    pub fn bounds(&self, j: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let k = self.half_width.finite()?;
        let c = self.center.component(j);
        let s = self.modulation.values(j);
        let lower = c.iter().zip(s).map(|(c, s)| c - k * s).collect();
        let upper = c.iter().zip(s).map(|(c, s)| c + k * s).collect();
        Some((lower, upper))
    }

    /// `∫ 2 k s_j(q) dq` over `[a, b]` for one component.
    pub fn component_size(&self, j: usize, a: f64, b: f64) -> Result<f64> {
        let k = self
            .half_width
            .finite()
            .ok_or(Error::EntireSpace("band size"))?;
        let g = self.center.grid(j);
        Ok(2.0 * k * g.integrate_range(self.modulation.values(j), a, b))
    }
}

/// Sum over components of the area between upper and lower bound.
pub fn band_size(band: &PredictionBand) -> Result<f64> {
    let k = band
        .half_width
        .finite()
        .ok_or(Error::EntireSpace("band size"))?;
    Ok((0..band.p())
        .map(|j| 2.0 * k * band.grid(j).integrate(band.modulation.values(j)))
        .sum())
}

/// Membership test; boundary points (score exactly `k`) belong to the band.
pub fn band_contains(band: &PredictionBand, y: &FunctionalSample) -> Result<bool> {
    y.check_shape(&band.center, "band membership")?;
    match band.half_width {
        HalfWidth::EntireSpace => Ok(true),
        HalfWidth::Finite(k) => Ok(weighted_sup_score(y, &band.center, &band.modulation)? <= k),
    }
}
