use crate::error::{Error, Result};
use crate::func::{FunctionalSample, Grid};

/// A time series of functional observations with an optional scalar covariate.
///
/// Time indices are 1-based throughout the crate: `curve(1)` is the oldest
/// observation.
#[derive(Debug, Clone)]
pub struct FunctionalSeries {
    curves: Vec<FunctionalSample>,
    scalar: Option<Vec<f64>>,
}

impl FunctionalSeries {
    pub fn new(curves: Vec<FunctionalSample>) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::Argument("series needs at least one curve".into()))?;
        for (i, c) in curves.iter().enumerate() {
            if !c.same_shape(first) {
                return Err(Error::Shape(format!(
                    "curve at t={} has a different layout",
                    i + 1
                )));
            }
        }
        Ok(FunctionalSeries {
            curves,
            scalar: None,
        })
    }

    /// Attaches a scalar covariate observed at the same times as the curves.
    pub fn with_scalar(mut self, scalar: Vec<f64>) -> Result<Self> {
        if scalar.len() != self.curves.len() {
            return Err(Error::Shape(format!(
                "{} scalar values for {} curves",
                scalar.len(),
                self.curves.len()
            )));
        }
        self.scalar = Some(scalar);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn grids(&self) -> &[Grid] {
        self.curves[0].grids()
    }

    pub fn curve(&self, t: usize) -> Option<&FunctionalSample> {
        t.checked_sub(1).and_then(|i| self.curves.get(i))
    }

    pub fn scalar(&self, t: usize) -> Option<f64> {
        let s = self.scalar.as_ref()?;
        t.checked_sub(1).and_then(|i| s.get(i)).copied()
    }

    pub fn has_scalar(&self) -> bool {
        self.scalar.is_some()
    }

    pub fn curves(&self) -> &[FunctionalSample] {
        &self.curves
    }

    /// The first `t` observations.
    pub fn truncated(&self, t: usize) -> FunctionalSeries {
        FunctionalSeries {
            curves: self.curves[..t.min(self.len())].to_vec(),
            scalar: self.scalar.as_ref().map(|s| s[..t.min(s.len())].to_vec()),
        }
    }

    pub(crate) fn require_curve(&self, t: usize, needed_by: usize) -> Result<&FunctionalSample> {
        self.curve(t).ok_or_else(|| Error::Unavailable {
            t: needed_by,
            reason: format!("curve at t={t} is outside the series (len {})", self.len()),
        })
    }

    pub(crate) fn require_scalar(&self, t: usize, needed_by: usize) -> Result<f64> {
        self.scalar(t).ok_or_else(|| Error::Unavailable {
            t: needed_by,
            reason: format!("scalar covariate at t={t} is unavailable"),
        })
    }
}
