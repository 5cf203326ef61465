use serde::{Deserialize, Serialize};

use super::order::{AuctionBook, Order, Side};
use crate::error::{Error, Result};
use crate::func::Grid;
use crate::predictors::Direction;

/// Aggregate supply or demand curve: price as a step function of cumulative quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// Offers sorted by ascending price; nondecreasing in quantity.
    Offer,
    /// Bids sorted by descending price; nonincreasing in quantity.
    Demand,
}

impl CurveKind {
    pub fn side(self) -> Side {
        match self {
            CurveKind::Offer => Side::Offer,
            CurveKind::Demand => Side::Bid,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            CurveKind::Offer => Direction::Increasing,
            CurveKind::Demand => Direction::Decreasing,
        }
    }

    /// Whether price `a` ranks strictly ahead of `b` in the merit order.
    fn ahead(self, a: f64, b: f64) -> bool {
        match self {
            CurveKind::Offer => a < b,
            CurveKind::Demand => a > b,
        }
    }
}

impl From<Side> for CurveKind {
    fn from(s: Side) -> Self {
        match s {
            Side::Offer => CurveKind::Offer,
            Side::Bid => CurveKind::Demand,
        }
    }
}

/// Segment `i` carries `prices[i]` on `[breakpoints[i-1], breakpoints[i])`,
/// with `breakpoints[-1] = 0`. Values are right-continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    kind: CurveKind,
    breakpoints: Vec<f64>,
    prices: Vec<f64>,
}

impl StepCurve {
    /// Sorts the orders by merit and merges equal prices into one segment.
    pub fn from_orders<'a>(
        kind: CurveKind,
        orders: impl IntoIterator<Item = &'a Order>,
    ) -> Result<Self> {
        let mut pq: Vec<(f64, f64)> = orders.into_iter().map(|o| (o.price, o.qty)).collect();
        if pq.is_empty() {
            return Err(Error::Argument(format!(
                "no {} orders to build a curve from",
                kind.side()
            )));
        }
        match kind {
            CurveKind::Offer => pq.sort_by(|a, b| a.0.total_cmp(&b.0)),
            CurveKind::Demand => pq.sort_by(|a, b| b.0.total_cmp(&a.0)),
        }
        let mut breakpoints: Vec<f64> = Vec::new();
        let mut prices: Vec<f64> = Vec::new();
        let mut cum = 0.0;
        for (p, q) in pq {
            cum += q;
            if prices.last() == Some(&p) {
                *breakpoints.last_mut().expect("nonempty") = cum;
            } else {
                prices.push(p);
                breakpoints.push(cum);
            }
        }
        Ok(StepCurve {
            kind,
            breakpoints,
            prices,
        })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn total(&self) -> f64 {
        *self.breakpoints.last().expect("curves are nonempty")
    }

    /// Price at `q` for `0 <= q < total`.
    pub fn value(&self, q: f64) -> Option<f64> {
        if !(0.0..self.total()).contains(&q) {
            return None;
        }
        let i = self.breakpoints.partition_point(|b| *b <= q);
        Some(self.prices[i])
    }

    /// Limit from the left at `q` for `0 < q <= total`.
    pub fn left_limit(&self, q: f64) -> Option<f64> {
        if !(q > 0.0 && q <= self.total()) {
            return None;
        }
        let i = self.breakpoints.partition_point(|b| *b < q);
        Some(self.prices[i])
    }

    /// Values at the grid points, held flat at the last price beyond the
    /// total quantity.
    pub fn on_grid(&self, grid: &Grid) -> Vec<f64> {
        let last = *self.prices.last().expect("curves are nonempty");
        grid.points()
            .into_iter()
            .map(|q| self.value(q).unwrap_or(last))
            .collect()
    }

    /// The curve with an extra order inserted at its merit-order rank.
    pub fn with_order(&self, price: f64, qty: f64) -> Result<Self> {
        if !(qty >= 0.0 && qty.is_finite() && price.is_finite()) {
            return Err(Error::Argument(format!(
                "cannot inject {qty} MWh at {price}"
            )));
        }
        let mut segs = self.segments();
        let at = segs
            .iter()
            .position(|(p, _)| !self.kind.ahead(*p, price))
            .unwrap_or(segs.len());
        if segs.get(at).is_some_and(|(p, _)| *p == price) {
            segs[at].1 += qty;
        } else if qty > 0.0 {
            segs.insert(at, (price, qty));
        }
        Ok(self.with_segments(segs))
    }

    /// Removes `qty` MWh at exactly `price`; the inverse of [`with_order`](Self::with_order).
    pub fn without_order(&self, price: f64, qty: f64) -> Result<Self> {
        let mut segs = self.segments();
        let i = segs
            .iter()
            .position(|(p, _)| *p == price)
            .ok_or_else(|| Error::Argument(format!("no segment at price {price}")))?;
        let left = segs[i].1 - qty;
        let tol = 1e-9 * segs[i].1.max(1.0);
        if left < -tol {
            return Err(Error::Argument(format!(
                "only {} MWh at price {price}, cannot remove {qty}",
                segs[i].1
            )));
        }
        if left <= tol {
            segs.remove(i);
        } else {
            segs[i].1 = left;
        }
        if segs.is_empty() {
            return Err(Error::Argument("removal would leave an empty curve".into()));
        }
        Ok(self.with_segments(segs))
    }

    /// `(price, quantity)` per segment.
    fn segments(&self) -> Vec<(f64, f64)> {
        let mut prev = 0.0;
        self.prices
            .iter()
            .zip(&self.breakpoints)
            .map(|(p, b)| {
                let q = b - prev;
                prev = *b;
                (*p, q)
            })
            .collect()
    }

    fn with_segments(&self, segs: Vec<(f64, f64)>) -> Self {
        let mut cum = 0.0;
        let (prices, breakpoints) = segs
            .into_iter()
            .map(|(p, q)| {
                cum += q;
                (p, cum)
            })
            .unzip();
        StepCurve {
            kind: self.kind,
            breakpoints,
            prices,
        }
    }
}

/// Offer and demand curves of a book.
pub fn build_curves(book: &AuctionBook) -> Result<(StepCurve, StepCurve)> {
    Ok((
        StepCurve::from_orders(CurveKind::Offer, book.side(Side::Offer))?,
        StepCurve::from_orders(CurveKind::Demand, book.side(Side::Bid))?,
    ))
}
