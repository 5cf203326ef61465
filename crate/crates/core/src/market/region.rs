use serde::{Deserialize, Serialize};

use super::curve::CurveKind;
use crate::error::{Error, Result};
use crate::func::Grid;
use crate::predictors::Direction;

/// Bounds made monotone in `direction`, keeping exactly the monotone
/// curves that fit in the original band.
#[derive(Debug, Clone, PartialEq)]
pub struct Tightened {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Some grid point has `lower > upper`: no monotone curve fits.
    pub empty: bool,
}

fn running(values: &[f64], reverse: bool, pick: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = values.to_vec();
    let n = out.len();
    for step in 1..n {
        let (prev, cur) = if reverse {
            (n - step, n - step - 1)
        } else {
            (step - 1, step)
        };
        out[cur] = pick(out[cur], out[prev]);
    }
    out
}

/// Increasing: `lower'` is the running max of `lower` from the left and
/// `upper'` the running min of `upper` from the right. Decreasing is mirrored.
pub fn tighten_band(lower: &[f64], upper: &[f64], direction: Direction) -> Tightened {
    let (lower, upper) = match direction {
        Direction::Increasing => (
            running(lower, false, f64::max),
            running(upper, true, f64::min),
        ),
        Direction::Decreasing => (
            running(lower, true, f64::max),
            running(upper, false, f64::min),
        ),
    };
    let empty = lower.iter().zip(&upper).any(|(l, u)| l > u);
    Tightened {
        lower,
        upper,
        empty,
    }
}

/// Predicted curve with its (tightened) band for one side of the market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideBand {
    pub kind: CurveKind,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub empty: bool,
}

impl SideBand {
    /// `center ± k·s`, then tightened in the curve's direction.
    pub fn new(kind: CurveKind, center: Vec<f64>, modulation: &[f64], k: f64) -> Result<Self> {
        if center.len() != modulation.len() {
            return Err(Error::Shape("center and modulation lengths differ".into()));
        }
        let lo: Vec<f64> = center
            .iter()
            .zip(modulation)
            .map(|(c, s)| c - k * s)
            .collect();
        let hi: Vec<f64> = center
            .iter()
            .zip(modulation)
            .map(|(c, s)| c + k * s)
            .collect();
        let t = tighten_band(&lo, &hi, kind.direction());
        Ok(SideBand {
            kind,
            center,
            lower: t.lower,
            upper: t.upper,
            empty: t.empty,
        })
    }

    pub fn contains(&self, curve: &[f64]) -> bool {
        curve
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(y, (l, u))| l - tol(*l) <= *y && *y <= u + tol(*u))
    }

    /// All three curves after an extra order of `qty` at `price`.
    pub fn with_order(&self, grid: &Grid, price: f64, qty: f64) -> Result<SideBand> {
        let f = |v: &[f64]| inject_on_grid(v, grid, self.kind, price, qty);
        Ok(SideBand {
            kind: self.kind,
            center: f(&self.center)?,
            lower: f(&self.lower)?,
            upper: f(&self.upper)?,
            empty: self.empty,
        })
    }
}

fn tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

/// Value at `q`, linearly interpolated, with the empty-side convention
/// below zero quantity (`+∞` for demand, `-∞` for offer).
fn shifted(values: &[f64], grid: &Grid, kind: CurveKind, q: f64) -> f64 {
    if q < grid.lo() - 1e-9 * grid.spacing() {
        match kind {
            CurveKind::Demand => f64::INFINITY,
            CurveKind::Offer => f64::NEG_INFINITY,
        }
    } else {
        grid.interpolate(values, q)
    }
}

/// Curve after an extra order at its merit-order rank, on grid values:
/// demand `D'(q) = max(D(q), min(D(q-x), p))`, offer
/// `O'(q) = min(O(q), max(O(q-x), p))`.
///
/// Pointwise monotone in the input curve, so a band that contains a curve
/// still contains it after the same order is added to all three.
pub fn inject_on_grid(
    values: &[f64],
    grid: &Grid,
    kind: CurveKind,
    price: f64,
    qty: f64,
) -> Result<Vec<f64>> {
    if !(qty >= 0.0 && qty.is_finite() && price.is_finite()) {
        return Err(Error::Argument(format!(
            "cannot inject {qty} MWh at {price}"
        )));
    }
    if values.len() != grid.len() {
        return Err(Error::Shape("curve does not match the grid".into()));
    }
    Ok(grid
        .points()
        .into_iter()
        .zip(values)
        .map(|(q, v)| {
            let s = shifted(values, grid, kind, q - qty);
            match kind {
                CurveKind::Demand => v.max(s.min(price)),
                CurveKind::Offer => v.min(s.max(price)),
            }
        })
        .collect())
}

/// Inverse of [`inject_on_grid`]: exact when `qty` is a multiple of the
/// grid spacing, away from the right end of the domain.
pub fn remove_on_grid(
    values: &[f64],
    grid: &Grid,
    kind: CurveKind,
    price: f64,
    qty: f64,
) -> Vec<f64> {
    grid.points()
        .into_iter()
        .zip(values)
        .map(|(q, v)| {
            let kept = match kind {
                CurveKind::Demand => *v > price,
                CurveKind::Offer => *v < price,
            };
            if kept {
                *v
            } else {
                grid.interpolate(values, q + qty)
            }
        })
        .collect()
}

/// Nonempty price interval of the region at one grid quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSlice {
    pub q: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Overlap of the offer and demand bands in the (quantity, price) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRegion {
    grid: Grid,
    offer: (Vec<f64>, Vec<f64>),
    demand: (Vec<f64>, Vec<f64>),
}

/// Region where the two (tightened) bands overlap.
pub fn intersection_region(
    grid: &Grid,
    offer: &SideBand,
    demand: &SideBand,
) -> Result<PredictionRegion> {
    if offer.kind != CurveKind::Offer || demand.kind != CurveKind::Demand {
        return Err(Error::Argument(
            "expected an offer band and a demand band".into(),
        ));
    }
    if offer.lower.len() != grid.len() || demand.lower.len() != grid.len() {
        return Err(Error::Shape("bands do not match the grid".into()));
    }
    Ok(PredictionRegion {
        grid: *grid,
        offer: (offer.lower.clone(), offer.upper.clone()),
        demand: (demand.lower.clone(), demand.upper.clone()),
    })
}

impl PredictionRegion {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `[max(Lo, Ld), min(Uo, Ud)]` at grid index `i`, if nonempty.
    pub fn interval(&self, i: usize) -> Option<(f64, f64)> {
        let lo = self.offer.0[i].max(self.demand.0[i]);
        let hi = self.offer.1[i].min(self.demand.1[i]);
        (lo <= hi).then_some((lo, hi))
    }

    pub fn slices(&self) -> Vec<RegionSlice> {
        (0..self.grid.len())
            .filter_map(|i| {
                self.interval(i).map(|(lo, hi)| RegionSlice {
                    q: self.grid.point(i),
                    lo,
                    hi,
                })
            })
            .collect()
    }

    /// Prices reachable by a crossing inside `(q_{i-1}, q_i]`, `i >= 1`, if any.
    ///
    /// Each cell interval contains the slice intervals at both its ends.
    pub fn cell(&self, i: usize) -> Option<(f64, f64)> {
        let lo = self.offer.0[i - 1].max(self.demand.0[i]);
        let hi = self.offer.1[i].min(self.demand.1[i - 1]);
        (lo <= hi).then_some((lo, hi))
    }

    /// No crossing of band-contained monotone curves is possible.
    pub fn is_empty(&self) -> bool {
        (1..self.grid.len()).all(|i| self.cell(i).is_none())
    }

    /// Smallest and largest grid quantity with a nonempty slice.
    pub fn quantity_support(&self) -> Option<(f64, f64)> {
        let s = self.slices();
        Some((s.first()?.q, s.last()?.q))
    }

    /// Whether `(q, p)` can be the crossing of an increasing curve in the
    /// offer band and a decreasing curve in the demand band.
    ///
    /// Between grid points `q_{i-1} < q <= q_i` such a crossing satisfies
    /// `max(Lo(q_{i-1}), Ld(q_i)) <= p <= min(Uo(q_i), Ud(q_{i-1}))` whenever
    /// both curves lie in their bands at the grid points.
    pub fn contains(&self, q: f64, p: f64) -> bool {
        let g = &self.grid;
        if !(q >= g.lo() && q <= g.hi()) || !p.is_finite() {
            return false;
        }
        let mut right = (((q - g.lo()) / g.spacing()).ceil() as usize).min(g.len() - 1);
        while right > 0 && g.point(right - 1) >= q {
            right -= 1;
        }
        while right + 1 < g.len() && g.point(right) < q {
            right += 1;
        }
        let Some((lo, hi)) = self.cell(right.max(1)) else {
            return false;
        };
        lo - tol(lo) <= p && p <= hi + tol(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn running_max_of_lower() {
        let t = tighten_band(&[0.0, 1.0, 0.5], &[2.0, 3.0, 4.0], Direction::Increasing);
        assert_eq!(t.lower, vec![0.0, 1.0, 1.0]);
        assert_eq!(t.upper, vec![2.0, 3.0, 4.0]);
        assert!(!t.empty);
    }

    #[test]
    fn decreasing_is_mirrored() {
        let t = tighten_band(&[1.0, 0.0, 0.5], &[5.0, 6.0, 4.0], Direction::Decreasing);
        assert_eq!(t.lower, vec![1.0, 0.5, 0.5]);
        assert_eq!(t.upper, vec![5.0, 5.0, 4.0]);
    }

    #[test]
    fn monotone_bounds_are_unchanged() {
        let (l, u) = (vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]);
        let t = tighten_band(&l, &u, Direction::Increasing);
        assert_eq!((t.lower, t.upper), (l, u));
    }

    #[test]
    fn empty_band_is_flagged() {
        let t = tighten_band(&[0.0, 3.0, 0.0], &[1.0, 4.0, 1.0], Direction::Increasing);
        assert!(t.empty);
    }

    fn grid() -> Grid {
        Grid::new(0.0, 10.0, 11).unwrap()
    }

    #[test]
    fn identical_bands_give_the_band() {
        let lo: Vec<f64> = (0..11).map(f64::from).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
        let o = SideBand {
            kind: CurveKind::Offer,
            center: lo.clone(),
            lower: lo.clone(),
            upper: hi.clone(),
            empty: false,
        };
        let d = SideBand {
            kind: CurveKind::Demand,
            ..o.clone()
        };
        let r = intersection_region(&grid(), &o, &d).unwrap();
        let s = r.slices();
        assert_eq!(s.len(), 11);
        assert!(s
            .iter()
            .zip(lo.iter().zip(&hi))
            .all(|(s, (l, h))| s.lo == *l && s.hi == *h));
    }

    #[test]
    fn disjoint_bands_give_an_empty_region() {
        let o = SideBand {
            kind: CurveKind::Offer,
            center: vec![11.0; 11],
            lower: vec![10.0; 11],
            upper: vec![12.0; 11],
            empty: false,
        };
        let d = SideBand {
            kind: CurveKind::Demand,
            center: vec![5.0; 11],
            lower: vec![4.0; 11],
            upper: vec![6.0; 11],
            empty: false,
        };
        let r = intersection_region(&grid(), &o, &d).unwrap();
        assert!(r.is_empty());
        assert!(r.quantity_support().is_none());
        assert!(!r.contains(5.0, 8.0));
    }

    #[test]
    fn zero_quantity_injection_is_identity() {
        let v: Vec<f64> = (0..11).map(|i| 20.0 - i as f64).collect();
        assert_eq!(
            inject_on_grid(&v, &grid(), CurveKind::Demand, 12.0, 0.0).unwrap(),
            v
        );
    }

    #[test]
    fn demand_injection_on_grid() {
        // D = 20, 19, ..., 10; bid of 3 at 15.5 inserts a flat step after prices above 15.5
        let v: Vec<f64> = (0..11).map(|i| 20.0 - i as f64).collect();
        let out = inject_on_grid(&v, &grid(), CurveKind::Demand, 15.5, 3.0).unwrap();
        assert_eq!(
            out,
            vec![20.0, 19.0, 18.0, 17.0, 16.0, 15.5, 15.5, 15.5, 15.0, 14.0, 13.0]
        );
        let back = remove_on_grid(&out, &grid(), CurveKind::Demand, 15.5, 3.0);
        assert_eq!(&back[..8], &v[..8]);
    }

    proptest! {
        #[test]
        fn tightening_keeps_exactly_the_monotone_curves(
            lo in proptest::collection::vec(-5.0..5.0f64, 8),
            width in proptest::collection::vec(0.0..6.0f64, 8),
            steps in proptest::collection::vec(0.0..2.0f64, 8),
            start in -8.0..8.0f64,
            inc in any::<bool>(),
        ) {
            let dir = if inc { Direction::Increasing } else { Direction::Decreasing };
            let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
            let t = tighten_band(&lo, &hi, dir);
            prop_assert!(t.lower.iter().zip(&lo).all(|(a, b)| a >= b));
            prop_assert!(t.upper.iter().zip(&hi).all(|(a, b)| a <= b));
            let mut y = start;
            let curve: Vec<f64> = steps.iter().map(|s| { y += if inc { *s } else { -*s }; y }).collect();
            let in_orig = curve.iter().enumerate().all(|(i, v)| lo[i] <= *v && *v <= hi[i]);
            let in_tight = curve.iter().enumerate().all(|(i, v)| t.lower[i] <= *v && *v <= t.upper[i]);
            prop_assert_eq!(in_orig, in_tight);
        }

        #[test]
        fn injection_preserves_monotonicity_and_order(
            steps in proptest::collection::vec(0.0..3.0f64, 11),
            gap in 0.0..4.0f64,
            price in 0.0..40.0f64,
            qty in 0.0..12.0f64,
            demand in any::<bool>(),
        ) {
            let kind = if demand { CurveKind::Demand } else { CurveKind::Offer };
            let mut y = if demand { 40.0 } else { 0.0 };
            let v: Vec<f64> = steps.iter().map(|s| { y += if demand { -*s } else { *s }; y }).collect();
            let w: Vec<f64> = v.iter().map(|x| x + gap).collect();
            let a = inject_on_grid(&v, &grid(), kind, price, qty).unwrap();
            let b = inject_on_grid(&w, &grid(), kind, price, qty).unwrap();
            for p in a.windows(2) {
                let ok = if demand { p[1] <= p[0] } else { p[1] >= p[0] };
                prop_assert!(ok);
            }
            prop_assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
        }
    }
}
