//! Request handlers as plain functions of the store and the raw query.
//! The HTTP layer only routes and encodes.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::store::{round_json, AlphaBands, ArtifactStore, DayArtifact};
use crate::market::{
    equilibrium, intersection_region, CurveKind, PredictionRegion, Side, SideBand,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    pub fn body(&self) -> String {
        json!({"error": {"status": self.status, "message": self.message}}).to_string()
    }
}

pub type ApiResult = Result<Value, ApiError>;

/// Compact JSON with every float rounded to 9 significant digits.
pub fn encode(mut v: Value) -> String {
    round_json(&mut v);
    v.to_string()
}

pub fn health(store: &ArtifactStore) -> Value {
    json!({"status": "ok", "days": store.index().days.len()})
}

pub fn days(store: &ArtifactStore) -> Value {
    let ix = store.index();
    json!({
        "days": ix.days,
        "alphas": ix.alphas,
        "window": ix.window,
        "l": ix.l,
        "b": ix.b,
        "min_alpha": ix.min_alpha(),
        "convention": ix.convention,
    })
}

fn parse_day(day: Option<&str>) -> Result<NaiveDate, ApiError> {
    let s = day.ok_or_else(|| ApiError::new(400, "missing query parameter `day`"))?;
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| ApiError::new(400, format!("day `{s}` is not YYYY-MM-DD")))
}

fn parse_alpha(alpha: Option<&str>) -> Result<f64, ApiError> {
    let s = alpha.ok_or_else(|| ApiError::new(400, "missing query parameter `alpha`"))?;
    s.trim()
        .parse::<f64>()
        .map_err(|_| ApiError::new(400, format!("alpha `{s}` is not a number")))
}

/// Resolves `(day, alpha)` to its artifacts: 404 for an unknown day or an
/// alpha that was not precomputed, 422 for an alpha with no finite band.
fn lookup(
    store: &ArtifactStore,
    day: NaiveDate,
    alpha: f64,
) -> Result<(&DayArtifact, &AlphaBands), ApiError> {
    let ix = store.index();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ApiError::new(
            422,
            format!("alpha={alpha} must lie in (0, 1)"),
        ));
    }
    if alpha + 1e-12 < ix.min_alpha() {
        return Err(ApiError::new(
            422,
            format!(
                "alpha={alpha} is below b/(l+1) = {}/{} = {}; the band would be the entire space",
                ix.b,
                ix.l + 1,
                ix.min_alpha()
            ),
        ));
    }
    let art = store.day(day).ok_or_else(|| {
        let range = match (ix.days.first(), ix.days.last()) {
            (Some(a), Some(b)) => format!("{a}..{b}"),
            _ => "none".into(),
        };
        ApiError::new(404, format!("no bands for {day} (available: {range})"))
    })?;
    let bands = art.at_alpha(alpha).ok_or_else(|| {
        ApiError::new(
            404,
            format!(
                "alpha={alpha} was not precomputed (available: {:?})",
                ix.alphas
            ),
        )
    })?;
    Ok((art, bands))
}

fn side_json(b: &SideBand) -> Value {
    json!({"center": b.center, "lower": b.lower, "upper": b.upper, "empty": b.empty})
}

pub fn bands(store: &ArtifactStore, day: Option<&str>, alpha: Option<&str>) -> ApiResult {
    let (day, alpha) = (parse_day(day)?, parse_alpha(alpha)?);
    let (art, b) = lookup(store, day, alpha)?;
    let observed = art.observed.as_ref().map(|o| {
        json!({
            "offer": o.offer,
            "demand": o.demand,
            "contained_offer": b.offer.contains(&o.offer),
            "contained_demand": b.demand.contains(&o.demand),
            "contained_band": b.contained,
        })
    });
    Ok(json!({
        "day": day,
        "alpha": b.alpha,
        "k": b.k,
        "q": store.grid().points(),
        "offer": side_json(&b.offer),
        "demand": side_json(&b.demand),
        "observed": observed,
    }))
}

fn region_json(
    store: &ArtifactStore,
    region: &PredictionRegion,
    offer: &SideBand,
    demand: &SideBand,
) -> Value {
    let slices = region.slices();
    let p_lo = offer
        .lower
        .iter()
        .chain(&demand.lower)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let p_hi = offer
        .upper
        .iter()
        .chain(&demand.upper)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let g = store.grid();
    json!({
        "empty": region.is_empty(),
        "q": slices.iter().map(|s| s.q).collect::<Vec<_>>(),
        "lo": slices.iter().map(|s| s.lo).collect::<Vec<_>>(),
        "hi": slices.iter().map(|s| s.hi).collect::<Vec<_>>(),
        "support": region.quantity_support(),
        "bbox": {"q": [g.lo(), g.hi()], "p": [p_lo, p_hi]},
    })
}

fn build_region(
    store: &ArtifactStore,
    offer: &SideBand,
    demand: &SideBand,
) -> Result<PredictionRegion, ApiError> {
    intersection_region(store.grid(), offer, demand).map_err(|e| ApiError::new(500, e.to_string()))
}

pub fn region(store: &ArtifactStore, day: Option<&str>, alpha: Option<&str>) -> ApiResult {
    let (day, alpha) = (parse_day(day)?, parse_alpha(alpha)?);
    let (art, b) = lookup(store, day, alpha)?;
    let region = build_region(store, &b.offer, &b.demand)?;
    let mut out = region_json(store, &region, &b.offer, &b.demand);
    out["day"] = json!(day);
    out["alpha"] = json!(b.alpha);
    out["observed"] = match art.observed.as_ref().and_then(|o| o.equilibrium) {
        Some(e) => json!({"Q": e.q, "P": e.p, "inside": region.contains(e.q, e.p)}),
        None => Value::Null,
    };
    Ok(out)
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub day: String,
    pub alpha: f64,
    /// `offer`, `bid` or `demand`.
    pub side: String,
    pub price: f64,
    pub qty: f64,
}

/// Base region and the region after adding one order to the predicted curve
/// of its side (centre and both bounds). When the day was observed, the
/// observed equilibrium before and after the same order is included too.
pub fn whatif(store: &ArtifactStore, body: &[u8]) -> ApiResult {
    let req: WhatIfRequest = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(400, format!("invalid what-if request: {e}")))?;
    let side: Side = req.side.parse().map_err(|_| {
        ApiError::new(
            422,
            format!("side `{}` must be offer, bid or demand", req.side),
        )
    })?;
    if !(req.qty > 0.0 && req.qty.is_finite()) {
        return Err(ApiError::new(
            422,
            format!("qty must be a positive number of MWh, got {}", req.qty),
        ));
    }
    if !(req.price >= 0.0 && req.price.is_finite()) {
        return Err(ApiError::new(
            422,
            format!("price must be finite and >= 0, got {}", req.price),
        ));
    }
    let day = parse_day(Some(&req.day))?;
    let (art, b) = lookup(store, day, req.alpha)?;
    let grid = store.grid();
    let (mut offer, mut demand) = (b.offer.clone(), b.demand.clone());
    let target = match CurveKind::from(side) {
        CurveKind::Offer => &mut offer,
        CurveKind::Demand => &mut demand,
    };
    *target = target
        .with_order(grid, req.price, req.qty)
        .map_err(|e| ApiError::new(422, e.to_string()))?;

    let base_region = build_region(store, &b.offer, &b.demand)?;
    let new_region = build_region(store, &offer, &demand)?;
    let mut base = region_json(store, &base_region, &b.offer, &b.demand);
    let mut modified = region_json(store, &new_region, &offer, &demand);
    modified["offer"] = side_json(&offer);
    modified["demand"] = side_json(&demand);
    if let Some(o) = &art.observed {
        let convention = store.index().convention;
        let (mut oc, mut dc) = (o.offer_curve.clone(), o.demand_curve.clone());
        match side {
            Side::Offer => {
                oc = oc
                    .with_order(req.price, req.qty)
                    .map_err(|e| ApiError::new(422, e.to_string()))?
            }
            Side::Bid => {
                dc = dc
                    .with_order(req.price, req.qty)
                    .map_err(|e| ApiError::new(422, e.to_string()))?
            }
        }
        let point = |e: Option<crate::market::Equilibrium>, r: &PredictionRegion| match e {
            Some(e) => json!({"Q": e.q, "P": e.p, "inside": r.contains(e.q, e.p)}),
            None => Value::Null,
        };
        base["observed"] = point(o.equilibrium, &base_region);
        modified["observed"] = point(equilibrium(&oc, &dc, convention), &new_region);
    }
    Ok(json!({
        "day": day,
        "alpha": b.alpha,
        "order": {"side": side, "price": req.price, "qty": req.qty},
        "base": base,
        "modified": modified,
    }))
}
