use nalgebra::{Cholesky, DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::func::{FunctionalSample, Grid};
use crate::predictors::Basis;
use crate::series::FunctionalSeries;

/// Settings of the trivariate VAR(2) functional process.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    /// Number of observed curves `T`; one extra curve is generated as truth.
    pub t_len: usize,
    pub upsilon1: Matrix3<f64>,
    pub upsilon2: Matrix3<f64>,
    pub sigma: Matrix3<f64>,
    /// Student-t degrees of freedom; `None` draws Gaussian innovations.
    pub df: Option<f64>,
    pub burn_in: usize,
    pub grid_n: usize,
    pub seed: u64,
}

fn equicorrelated(diag: f64, off: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| if i == j { diag } else { off })
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            t_len: 25,
            upsilon1: equicorrelated(0.8, 0.3),
            upsilon2: equicorrelated(0.5, 0.1),
            sigma: equicorrelated(0.5, 0.3),
            df: Some(4.0),
            burn_in: 100,
            grid_n: 100,
            seed: 0,
        }
    }
}

impl DgpConfig {
    /// Temporally independent curves: both lag matrices are zero.
    pub fn iid() -> Self {
        DgpConfig {
            upsilon1: Matrix3::zeros(),
            upsilon2: Matrix3::zeros(),
            ..DgpConfig::default()
        }
    }

    pub fn psi1(&self) -> Matrix3<f64> {
        psi_bar(&self.upsilon1)
    }

    pub fn psi2(&self) -> Matrix3<f64> {
        psi_bar(&self.upsilon2)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::unit(self.grid_n)
    }

    pub fn basis(&self) -> Result<Basis> {
        Ok(Basis::fourier3(self.grid()?))
    }

    /// Covariance of the innovations (`Σ·df/(df-2)` for Student-t).
    pub fn innovation_covariance(&self) -> Result<Matrix3<f64>> {
        match self.df {
            None => Ok(self.sigma),
            Some(df) if df > 2.0 => Ok(self.sigma * (df / (df - 2.0))),
            Some(df) => Err(Error::Argument(format!(
                "innovations with df={df} have no finite covariance"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_len == 0 {
            return Err(Error::Argument("T must be >= 1".into()));
        }
        if let Some(df) = self.df {
            if !(df > 0.0 && df.is_finite()) {
                return Err(Error::Argument(format!("df must be positive, got {df}")));
            }
        }
        check_stable(&self.psi1(), &self.psi2())?;
        MvtSampler::new(self.df, self.sigma).map(|_| ())
    }
}

/// `Υ / (2‖Υ‖_F)`, or zero for the zero matrix.
pub fn psi_bar(upsilon: &Matrix3<f64>) -> Matrix3<f64> {
    let n = upsilon.norm();
    if n == 0.0 {
        Matrix3::zeros()
    } else {
        upsilon / (2.0 * n)
    }
}

/// Checks that `det(I - Ψ₁u - Ψ₂u²) ≠ 0` for `|u| ≤ 1`, i.e. that every
/// eigenvalue of the companion matrix lies strictly inside the unit circle.
pub fn check_stable(psi1: &Matrix3<f64>, psi2: &Matrix3<f64>) -> Result<()> {
    let radius = spectral_radius(psi1, psi2);
    if radius < 1.0 {
        Ok(())
    } else {
        Err(Error::Unstable(format!(
            "det(I - Ψ₁u - Ψ₂u²) vanishes for some |u| <= 1 (companion spectral radius {radius:.6})"
        )))
    }
}

pub fn spectral_radius(psi1: &Matrix3<f64>, psi2: &Matrix3<f64>) -> f64 {
    let mut c = DMatrix::zeros(6, 6);
    c.view_mut((0, 0), (3, 3)).copy_from(psi1);
    c.view_mut((0, 3), (3, 3)).copy_from(psi2);
    c.view_mut((3, 0), (3, 3)).fill_with_identity();
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Draws from the multivariate Student-t (or Gaussian) law with scale `Σ`.
#[derive(Debug, Clone)]
pub struct MvtSampler {
    df: Option<f64>,
    /// Lower Cholesky factor; `None` when `Σ = 0`.
    factor: Option<Matrix3<f64>>,
}

impl MvtSampler {
    pub fn new(df: Option<f64>, sigma: Matrix3<f64>) -> Result<Self> {
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("scale matrix must be finite".into()));
        }
        if (sigma - sigma.transpose()).abs().max() > 1e-12 * sigma.abs().max().max(1.0) {
            return Err(Error::Decomposition("scale matrix is not symmetric".into()));
        }
        if sigma.iter().all(|v| *v == 0.0) {
            return Ok(MvtSampler { df, factor: None });
        }
        let chol = Cholesky::new(sigma)
            .ok_or_else(|| Error::Decomposition("scale matrix is not positive definite".into()))?;
        Ok(MvtSampler {
            df,
            factor: Some(chol.l()),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        let Some(l) = &self.factor else {
            return Vector3::zeros();
        };
        let z = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let x = l * z;
        match self.df {
            None => x,
            Some(df) => {
                let chi2: f64 = ChiSquared::new(df)
                    .expect("df checked positive")
                    .sample(rng);
                x * (df / chi2).sqrt()
            }
        }
    }
}

/// One draw of `N(0, Σ)·sqrt(df/χ²_df)`; `df = None` gives the Gaussian limit.
pub fn sample_mvt<R: Rng + ?Sized>(
    df: Option<f64>,
    sigma: &Matrix3<f64>,
    rng: &mut R,
) -> Result<Vector3<f64>> {
    Ok(MvtSampler::new(df, *sigma)?.sample(rng))
}

/// A simulated path: `T+1` curves with their basis coefficients and innovations.
#[derive(Debug, Clone)]
pub struct SimulatedSeries {
    pub series: FunctionalSeries,
    /// `coefs[t-1] = ȳ_t`.
    pub coefs: Vec<Vector3<f64>>,
    /// `innovations[t-1] = ε̄_t`.
    pub innovations: Vec<Vector3<f64>>,
}

impl SimulatedSeries {
    /// The first `T` curves, without the held-out truth.
    pub fn observed(&self) -> FunctionalSeries {
        self.series.truncated(self.series.len() - 1)
    }

    pub fn truth(&self) -> &FunctionalSample {
        self.series.curves().last().expect("series is nonempty")
    }
}

/// Simulates `T+1` curves seeded from `cfg.seed`.
pub fn simulate_series(cfg: &DgpConfig) -> Result<SimulatedSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    simulate_with_rng(cfg, &mut rng)
}

/// Simulates `T+1` curves after discarding `burn_in` steps started at zero.
pub fn simulate_with_rng<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Result<SimulatedSeries> {
    cfg.validate()?;
    let (psi1, psi2) = (cfg.psi1(), cfg.psi2());
    let sampler = MvtSampler::new(cfg.df, cfg.sigma)?;
    let basis = cfg.basis()?;
    let keep = cfg.t_len + 1;
    let mut prev1 = Vector3::zeros();
    let mut prev2 = Vector3::zeros();
    let mut coefs = Vec::with_capacity(keep);
    let mut innovations = Vec::with_capacity(keep);
    for step in 0..cfg.burn_in + keep {
        let eps = sampler.sample(rng);
        let y = psi1 * prev1 + psi2 * prev2 + eps;
        prev2 = prev1;
        prev1 = y;
        if step >= cfg.burn_in {
            coefs.push(y);
            innovations.push(eps);
        }
    }
    let curves = coefs
        .iter()
        .map(|c| {
            let c = nalgebra::DVector::from_column_slice(c.as_slice());
            FunctionalSample::univariate(basis.expand(&c), *basis.grid())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedSeries {
        series: FunctionalSeries::new(curves)?,
        coefs,
        innovations,
    })
}
