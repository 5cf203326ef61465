use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::curve::StepCurve;
use crate::error::{Error, Result};

/// How the clearing price is picked when the curves meet on a vertical step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceConvention {
    /// Midpoint of `[O(Q⁻), D(Q⁻)]`, the price gap just left of `Q`.
    Midpoint,
    /// Midpoint of the set of prices where the two completed graphs
    /// (steps joined by vertical segments) meet at `Q`:
    /// `[max(O(Q⁻), D(Q⁺)), min(D(Q⁻), O(Q⁺))]`. The point always lies on
    /// both graphs.
    #[default]
    Crossing,
    /// Price of the last accepted offer, `O(Q⁻)`.
    MarginalOffer,
}

impl FromStr for PriceConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(PriceConvention::Midpoint),
            "crossing" => Ok(PriceConvention::Crossing),
            "marginal-offer" => Ok(PriceConvention::MarginalOffer),
            _ => Err(Error::Argument(format!(
                "unknown price convention `{s}` (midpoint, crossing, marginal-offer)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

/// Offer price with `+∞` beyond the offered quantity.
fn offer_at(o: &StepCurve, q: f64) -> f64 {
    o.value(q).unwrap_or(f64::INFINITY)
}

/// Demand price with `-∞` beyond the demanded quantity.
fn demand_at(d: &StepCurve, q: f64) -> f64 {
    d.value(q).unwrap_or(f64::NEG_INFINITY)
}

/// Exchanged quantity `Q = sup{q : D(q) >= O(q)}` and clearing price, or
/// `None` when demand starts below offer.
pub fn equilibrium(
    offer: &StepCurve,
    demand: &StepCurve,
    convention: PriceConvention,
) -> Option<Equilibrium> {
    if demand_at(demand, 0.0) < offer_at(offer, 0.0) {
        return None;
    }
    // D - O is a nonincreasing step function; it can only turn negative at a breakpoint.
    let mut cuts: Vec<f64> = offer
        .breakpoints()
        .iter()
        .chain(demand.breakpoints())
        .copied()
        .collect();
    cuts.sort_by(f64::total_cmp);
    let q = cuts
        .into_iter()
        .find(|&q| demand_at(demand, q) < offer_at(offer, q))
        .expect("one curve is exhausted at the smaller total");
    let o_left = offer.left_limit(q).expect("q within offered quantity");
    let d_left = demand.left_limit(q).expect("q within demanded quantity");
    let p = match convention {
        PriceConvention::Midpoint => 0.5 * (o_left + d_left),
        PriceConvention::MarginalOffer => o_left,
        PriceConvention::Crossing => {
            let lo = o_left.max(demand_at(demand, q));
            let hi = d_left.min(offer_at(offer, q));
            0.5 * (lo + hi)
        }
    };
    Some(Equilibrium { q, p })
}
