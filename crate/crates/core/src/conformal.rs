//! Split conformal prediction with a non-overlapping block permutation scheme.
//!
//! The calibration indices together with the target form the sequence
//! `1, ..., l+1`. The scheme is the cyclic group of shifts by multiples of
//! the block length `b`; the images of `l+1` under those shifts select which
//! calibration observations are scored. With `b = 1` every calibration
//! observation is scored and the procedure reduces to ordinary split
//! conformal prediction.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::func::{
    modulation_from_residuals, weighted_sup_score, FunctionalSample, HalfWidth, ModulationFunction,
    PredictionBand,
};
use crate::predictors::PointPredictor;
use crate::series::FunctionalSeries;

/// Slack used when flooring `alpha * |D|`, so that lattice values of alpha
/// computed in floating point land on the intended integer.
const LATTICE_TOL: f64 = 1e-9;

/// The permutation family for calibration size `l` and block length `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockScheme {
    l: usize,
    b: usize,
    n_perms: usize,
    d_set: Vec<usize>,
}

impl BlockScheme {
    pub fn new(l: usize, b: usize) -> Result<Self> {
        if l == 0 || b == 0 {
            return Err(Error::Argument(format!(
                "block scheme needs l >= 1 and b >= 1, got (l={l}, b={b})"
            )));
        }
        if b > l + 1 || !(l + 1).is_multiple_of(b) {
            return Err(Error::Argument(format!(
                "(l+1)/b must be a positive integer, got (l={l}, b={b})"
            )));
        }
        let n_perms = (l + 1) / b;
        let d_set = (1..=n_perms).map(|i| shift(l, b, i, l + 1)).collect();
        Ok(BlockScheme {
            l,
            b,
            n_perms,
            d_set,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// `|D| = (l+1)/b`.
    pub fn n_perms(&self) -> usize {
        self.n_perms
    }

    /// Images of `l+1`, listed in permutation order (`π_1(l+1) = l+1` first).
    pub fn d_set(&self) -> &[usize] {
        &self.d_set
    }

    /// Positions in `1..=l` whose calibration observations get scored.
    pub fn scored_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.d_set.iter().copied().filter(move |&d| d != self.l + 1)
    }

    /// `π_i(t)` for `1 <= i <= n_perms`, `1 <= t <= l+1`.
    pub fn apply(&self, i: usize, t: usize) -> usize {
        assert!((1..=self.n_perms).contains(&i) && (1..=self.l + 1).contains(&t));
        shift(self.l, self.b, i, t)
    }

    /// The full map of `π_i`, as a vector whose entry `t-1` is `π_i(t)`.
    pub fn permutation(&self, i: usize) -> Vec<usize> {
        (1..=self.l + 1).map(|t| self.apply(i, t)).collect()
    }

    /// Lowest alpha for which the band is not the whole space: `b/(l+1)`.
    pub fn min_alpha(&self) -> f64 {
        1.0 / self.n_perms as f64
    }
}

fn shift(l: usize, b: usize, i: usize, t: usize) -> usize {
    let off = (i - 1) * b;
    if t + off <= l + 1 {
        t + off
    } else {
        t + off - l - 1
    }
}

/// Training/calibration split of the time indices `r+1..=T` (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    train: Vec<usize>,
    calib: Vec<usize>,
    lag: usize,
    horizon: usize,
}

impl SplitPlan {
    /// Calibration set is the contiguous tail `T-l+1..=T`.
    pub fn contiguous(t_len: usize, l: usize, r: usize) -> Result<Self> {
        Self::check(t_len, l, r)?;
        Ok(SplitPlan {
            train: (r + 1..=t_len - l).collect(),
            calib: (t_len - l + 1..=t_len).collect(),
            lag: r,
            horizon: t_len,
        })
    }

    /// Calibration set is a uniformly random `l`-subset of `r+1..=T`.
    pub fn random<R: Rng + ?Sized>(t_len: usize, l: usize, r: usize, rng: &mut R) -> Result<Self> {
        Self::check(t_len, l, r)?;
        let pool = t_len - r;
        let mut calib: Vec<usize> = sample(rng, pool, l)
            .into_iter()
            .map(|i| i + r + 1)
            .collect();
        calib.sort_unstable();
        let train = (r + 1..=t_len)
            .filter(|t| calib.binary_search(t).is_err())
            .collect();
        Ok(SplitPlan {
            train,
            calib,
            lag: r,
            horizon: t_len,
        })
    }

    fn check(t_len: usize, l: usize, r: usize) -> Result<()> {
        if l == 0 {
            return Err(Error::Argument("calibration size l must be >= 1".into()));
        }
        if t_len < l + r + 1 {
            return Err(Error::Argument(format!(
                "T={t_len}, l={l}, r={r} leaves no training observations (need T-l-r >= 1)"
            )));
        }
        Ok(())
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn calib(&self) -> &[usize] {
        &self.calib
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Training size `m`.
    pub fn m(&self) -> usize {
        self.train.len()
    }

    pub fn l(&self) -> usize {
        self.calib.len()
    }

    /// Number of observed times `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The time being predicted, `T+1`.
    pub fn target(&self) -> usize {
        self.horizon + 1
    }

    /// `ω_d`: the d-th smallest element of the calibration indices plus `T+1`.
    pub fn omega(&self, d: usize) -> usize {
        if d == self.calib.len() + 1 {
            self.target()
        } else {
            self.calib[d - 1]
        }
    }
}

/// Calibration nonconformity scores, one per scored block.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    /// `(ω_d, R_{ω_d})` pairs.
    pub scores: Vec<(usize, f64)>,
}

impl ScoreSet {
    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|(_, v)| *v).collect()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Modulation from the in-sample residuals on the training indices.
pub fn training_modulation<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
) -> Result<ModulationFunction> {
    let residuals = training_residuals(fit, data, plan)?;
    modulation_from_residuals(&residuals)
}

pub fn training_residuals<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
) -> Result<Vec<FunctionalSample>> {
    plan.train
        .iter()
        .map(|&t| data.require_curve(t, t)?.sub(&fit.predict(data, t)?))
        .collect()
}

fn check_scheme(plan: &SplitPlan, scheme: &BlockScheme) -> Result<()> {
    if scheme.l != plan.l() {
        return Err(Error::Argument(format!(
            "scheme built for l={} but the plan has {} calibration indices",
            scheme.l,
            plan.l()
        )));
    }
    Ok(())
}

pub fn calibration_scores<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
    scheme: &BlockScheme,
    s: &ModulationFunction,
) -> Result<ScoreSet> {
    check_scheme(plan, scheme)?;
    let scores = scheme
        .scored_positions()
        .map(|d| {
            let t = plan.omega(d);
            let y = data.require_curve(t, t)?;
            let center = fit.predict(data, t)?;
            Ok((t, weighted_sup_score(y, &center, s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSet { scores })
}

/// Rank of the order statistic used as `k`: `⌈(l+1)(1-α)/b⌉`, or `None`
/// when alpha is below `b/(l+1)`.
pub fn quantile_rank(alpha: f64, l: usize, b: usize) -> Result<Option<usize>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if b == 0 || !(l + 1).is_multiple_of(b) {
        return Err(Error::Argument(format!(
            "(l+1)/b must be an integer, got (l={l}, b={b})"
        )));
    }
    let n = (l + 1) / b;
    let excluded = (alpha * n as f64 + LATTICE_TOL).floor() as usize;
    Ok((excluded >= 1).then(|| n - excluded))
}

/// Conformal half-width multiplier: the rank-th smallest calibration score.
pub fn conformal_k(scores: &ScoreSet, alpha: f64, l: usize, b: usize) -> Result<HalfWidth> {
    let Some(rank) = quantile_rank(alpha, l, b)? else {
        return Ok(HalfWidth::EntireSpace);
    };
    let expected = (l + 1) / b - 1;
    if scores.len() != expected {
        return Err(Error::Argument(format!(
            "expected {expected} calibration scores for (l={l}, b={b}), got {}",
            scores.len()
        )));
    }
    let mut v = scores.values();
    v.sort_by(f64::total_cmp);
    Ok(HalfWidth::Finite(v[rank - 1]))
}

/// Band centred at the prediction for time `t`.
pub fn predict_band<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    t: usize,
    s: &ModulationFunction,
    k: HalfWidth,
    alpha: f64,
) -> Result<PredictionBand> {
    let center = fit.predict(data, t)?;
    PredictionBand::new(center, s.clone(), k, alpha)
}

/// Conformal p-value of `candidate` as the value at `T+1`, computed by direct
/// enumeration of the permutations (no order statistic involved).
pub fn p_value_oracle<P: PointPredictor + ?Sized>(
    candidate: &FunctionalSample,
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
    scheme: &BlockScheme,
    s: &ModulationFunction,
) -> Result<f64> {
    check_scheme(plan, scheme)?;
    let target = plan.target();
    let r_new = weighted_sup_score(candidate, &fit.predict(data, target)?, s)?;
    let mut at_least = 0usize;
    for i in 1..=scheme.n_perms() {
        let d = scheme.apply(i, scheme.l() + 1);
        let r_d = if d == scheme.l() + 1 {
            r_new
        } else {
            let t = plan.omega(d);
            weighted_sup_score(data.require_curve(t, t)?, &fit.predict(data, t)?, s)?
        };
        if r_d >= r_new {
            at_least += 1;
        }
    }
    Ok(at_least as f64 / scheme.n_perms() as f64)
}

/// Coverage of the band under exchangeable data with continuous scores.
pub fn exact_iid_coverage(l: usize, b: usize, alpha: f64) -> Result<f64> {
    if b == 0 || !(l + 1).is_multiple_of(b) {
        return Err(Error::Argument(format!(
            "(l+1)/b must be an integer, got (l={l}, b={b})"
        )));
    }
    let n = ((l + 1) / b) as f64;
    Ok(1.0 - (alpha * n + LATTICE_TOL).floor() / n)
}

/// Everything produced by one run of the split procedure.
#[derive(Debug, Clone)]
pub struct BandFit {
    pub band: PredictionBand,
    pub scores: ScoreSet,
    pub modulation: ModulationFunction,
}

/// Training modulation, calibration scores, `k` and the band for `T+1`.
pub fn conformal_band<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
    scheme: &BlockScheme,
    alpha: f64,
) -> Result<BandFit> {
    let modulation = training_modulation(fit, data, plan)?;
    band_with_modulation(fit, data, plan, scheme, alpha, modulation)
}

pub fn band_with_modulation<P: PointPredictor + ?Sized>(
    fit: &P,
    data: &FunctionalSeries,
    plan: &SplitPlan,
    scheme: &BlockScheme,
    alpha: f64,
    modulation: ModulationFunction,
) -> Result<BandFit> {
    let scores = calibration_scores(fit, data, plan, scheme, &modulation)?;
    let k = conformal_k(&scores, alpha, scheme.l(), scheme.b())?;
    let band = predict_band(fit, data, plan.target(), &modulation, k, alpha)?;
    Ok(BandFit {
        band,
        scores,
        modulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{band_contains, Grid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_blocks_enumerate_every_position() {
        let s = BlockScheme::new(7, 1).unwrap();
        assert_eq!(s.n_perms(), 8);
        let mut d = s.d_set().to_vec();
        d.sort();
        assert_eq!(d, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn blocks_of_three_with_l5() {
        let s = BlockScheme::new(5, 3).unwrap();
        assert_eq!(s.permutation(2), vec![4, 5, 6, 1, 2, 3]);
        assert_eq!(s.d_set(), &[6, 3]);
        assert_eq!(s.scored_positions().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn blocks_of_six_with_l47() {
        let s = BlockScheme::new(47, 6).unwrap();
        assert_eq!(s.d_set().len(), 8);
        assert!(s.d_set().contains(&48));
    }

    #[test]
    fn scheme_rejects_non_divisible_blocks() {
        let e = BlockScheme::new(6, 3).unwrap_err().to_string();
        assert!(e.contains("l=6") && e.contains("b=3"), "{e}");
        assert!(BlockScheme::new(5, 7).is_err());
    }

    #[test]
    fn permutations_form_a_group() {
        for n in 2..=60usize {
            for b in (1..=n).filter(|b| n % b == 0) {
                let s = BlockScheme::new(n - 1, b).unwrap();
                let perms: Vec<Vec<usize>> = (1..=s.n_perms()).map(|i| s.permutation(i)).collect();
                assert_eq!(perms[0], (1..=n).collect::<Vec<_>>());
                for p in &perms {
                    for q in &perms {
                        let comp: Vec<usize> = q.iter().map(|&t| p[t - 1]).collect();
                        assert!(
                            perms.contains(&comp),
                            "closure fails for l={}, b={b}",
                            n - 1
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn contiguous_split_sizes() {
        let p = SplitPlan::contiguous(25, 7, 2).unwrap();
        assert_eq!(p.m(), 16);
        assert_eq!(p.calib(), (19..=25).collect::<Vec<_>>().as_slice());
        assert_eq!(SplitPlan::contiguous(90, 39, 8).unwrap().m(), 43);
        assert!(SplitPlan::contiguous(10, 9, 2).is_err());
    }

    #[test]
    fn random_split_partitions_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = SplitPlan::random(30, 9, 2, &mut rng).unwrap();
        let mut all: Vec<usize> = p.train().iter().chain(p.calib()).copied().collect();
        all.sort();
        assert_eq!(all, (3..=30).collect::<Vec<_>>());
        assert!(p.calib().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rank_arithmetic() {
        assert_eq!(quantile_rank(0.25, 39, 1).unwrap(), Some(30));
        assert_eq!(quantile_rank(0.25, 7, 1).unwrap(), Some(6));
        assert_eq!(quantile_rank(0.5, 39, 1).unwrap(), Some(20));
        assert_eq!(quantile_rank(0.01, 39, 1).unwrap(), None);
        assert!(quantile_rank(1.0, 7, 1).is_err());
    }

    #[test]
    fn k_is_order_statistic() {
        let scores = ScoreSet {
            scores: (1..=39).rev().map(|v| (v, v as f64)).collect(),
        };
        assert_eq!(
            conformal_k(&scores, 0.25, 39, 1).unwrap(),
            HalfWidth::Finite(30.0)
        );
        assert_eq!(
            conformal_k(&scores, 0.001, 39, 1).unwrap(),
            HalfWidth::EntireSpace
        );
    }

    #[test]
    fn k_keeps_ties() {
        let scores = ScoreSet {
            scores: vec![
                (1, 1.0),
                (2, 1.0),
                (3, 1.0),
                (4, 2.0),
                (5, 2.0),
                (6, 3.0),
                (7, 9.0),
            ],
        };
        assert_eq!(
            conformal_k(&scores, 0.25, 7, 1).unwrap(),
            HalfWidth::Finite(3.0)
        );
    }

    #[test]
    fn exact_coverage_values() {
        assert!((exact_iid_coverage(7, 1, 0.25).unwrap() - 0.75).abs() < 1e-15);
        assert!((exact_iid_coverage(479, 6, 0.25).unwrap() - 0.75).abs() < 1e-15);
        assert!((exact_iid_coverage(7, 1, 0.20).unwrap() - 0.875).abs() < 1e-15);
    }

    /// Predicts the previous curve.
    struct Persistence;

    impl PointPredictor for Persistence {
        fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample> {
            Ok(data.require_curve(t - 1, t)?.clone())
        }
    }

    fn random_series(len: usize, seed: u64) -> FunctionalSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::unit(5).unwrap();
        let curves = (0..len)
            .map(|_| {
                FunctionalSample::univariate((0..5).map(|_| rng.random::<f64>()).collect(), g)
                    .unwrap()
            })
            .collect();
        FunctionalSeries::new(curves).unwrap()
    }

    #[test]
    fn single_score_at_third_calibration_index() {
        let data = random_series(12, 1);
        let plan = SplitPlan::contiguous(12, 5, 1).unwrap();
        let scheme = BlockScheme::new(5, 3).unwrap();
        let s = training_modulation(&Persistence, &data, &plan).unwrap();
        let scores = calibration_scores(&Persistence, &data, &plan, &scheme, &s).unwrap();
        assert_eq!(scores.len(), 1);
        assert_eq!(scores.scores[0].0, plan.calib()[2]);
    }

    #[test]
    fn unit_block_scores_every_calibration_point() {
        let data = random_series(20, 2);
        let plan = SplitPlan::contiguous(20, 7, 1).unwrap();
        let scheme = BlockScheme::new(7, 1).unwrap();
        let s = training_modulation(&Persistence, &data, &plan).unwrap();
        let scores = calibration_scores(&Persistence, &data, &plan, &scheme, &s).unwrap();
        let mut times: Vec<usize> = scores.scores.iter().map(|x| x.0).collect();
        times.sort();
        assert_eq!(times, plan.calib());
    }

    #[test]
    fn center_has_p_value_one_and_outlier_has_minimum() {
        let data = random_series(20, 4);
        let plan = SplitPlan::contiguous(20, 7, 1).unwrap();
        let scheme = BlockScheme::new(7, 1).unwrap();
        let fit = conformal_band(&Persistence, &data, &plan, &scheme, 0.25).unwrap();
        let center = fit.band.center().clone();
        let p = p_value_oracle(
            &center,
            &Persistence,
            &data,
            &plan,
            &scheme,
            &fit.modulation,
        )
        .unwrap();
        assert_eq!(p, 1.0);
        assert!(band_contains(&fit.band, &center).unwrap());
        let far = center
            .map_components(|_, c| c.iter().map(|v| v + 1e6).collect())
            .unwrap();
        let p = p_value_oracle(&far, &Persistence, &data, &plan, &scheme, &fit.modulation).unwrap();
        assert_eq!(p, 1.0 / 8.0);
    }

    #[test]
    fn larger_alpha_gives_nested_band() {
        let data = random_series(60, 5);
        let plan = SplitPlan::contiguous(60, 39, 1).unwrap();
        let scheme = BlockScheme::new(39, 1).unwrap();
        let s = training_modulation(&Persistence, &data, &plan).unwrap();
        let scores = calibration_scores(&Persistence, &data, &plan, &scheme, &s).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [0.025, 0.1, 0.25, 0.5, 0.75, 0.975] {
            let k = conformal_k(&scores, alpha, 39, 1)
                .unwrap()
                .finite()
                .unwrap();
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let data = random_series(20, 2);
        let plan = SplitPlan::contiguous(20, 7, 1).unwrap();
        let scheme = BlockScheme::new(5, 1).unwrap();
        let s = training_modulation(&Persistence, &data, &plan).unwrap();
        assert!(calibration_scores(&Persistence, &data, &plan, &scheme, &s).is_err());
    }
}
