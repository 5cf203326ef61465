//! Point predictors wrapped by the conformal procedure.

mod basis;
mod concurrent;
mod monotone;
mod var;

pub use basis::Basis;
pub use concurrent::{fit_concurrent, ConcurrentCoefficients, ConcurrentPredictor, ConcurrentSpec};
pub use monotone::{monotone_correct, Direction, MonotoneCorrected};
pub use var::{fit_var, oracle_predictor, predict_var, VarCoefficients, VarPredictor};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::func::FunctionalSample;
use crate::series::FunctionalSeries;

/// A fitted regression map `x_t -> μ̂(x_t)`.
///
/// `predict` may read only the covariates of time `t` (lags and scalar
/// covariates), never the curve observed at `t` itself.
pub trait PointPredictor: Send + Sync {
    fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample>;
}

impl<P: PointPredictor + ?Sized> PointPredictor for Box<P> {
    fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample> {
        (**self).predict(data, t)
    }
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Least squares `Y ≈ X B`; rejects rank-deficient designs.
pub(crate) fn least_squares(
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    context: &str,
) -> Result<DMatrix<f64>> {
    let cols = x.ncols();
    if x.nrows() < cols {
        return Err(Error::RankDeficient {
            deficient: cols - x.nrows(),
            columns: cols,
            context: format!("{context} (only {} rows)", x.nrows()),
        });
    }
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > RANK_TOL * smax && **s > 0.0)
        .count();
    if rank < cols {
        return Err(Error::RankDeficient {
            deficient: cols - rank,
            columns: cols,
            context: context.to_string(),
        });
    }
    svd.solve(&y, 0.0)
        .map_err(|e| Error::Decomposition(format!("least squares{context}: {e}")))
}

/// Minimum-norm least squares: directions the design cannot identify get
/// zero weight instead of an error.
pub(crate) fn min_norm_least_squares(
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    context: &str,
) -> Result<DMatrix<f64>> {
    let svd = x.svd(true, true);
    let cut = RANK_TOL * svd.singular_values.max();
    svd.solve(&y, cut)
        .map_err(|e| Error::Decomposition(format!("least squares{context}: {e}")))
}
