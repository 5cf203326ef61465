//! Synthetic daily auction books.
//!
//! A fixed pool of traders quotes around a common price level that follows
//! a stationary AR(1). Each side ends with a large tail order (a high-price
//! offer, a zero-price bid) so both curves cover the whole quantity domain
//! and always cross inside it. An optional pipeline-manager agent (`op="PM"`)
//! adds a bid at an extreme price and an offer at zero price every day.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::order::{AuctionBook, Order, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    /// Traders per side.
    pub traders: usize,
    pub pipeline_manager: bool,
    /// Mean of the price level, Euro/MWh.
    pub base_price: f64,
    pub price_ar: f64,
    pub price_sd: f64,
    /// Each side's tail order pushes its total past this quantity.
    pub domain_hi: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            days: 400,
            seed: 7,
            traders: 25,
            pipeline_manager: true,
            base_price: 20.0,
            price_ar: 0.8,
            price_sd: 1.0,
            domain_hi: 2e5,
        }
    }
}

struct Trader {
    side: Side,
    markup: f64,
    qty: f64,
    activity: f64,
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Generates `cfg.days` consecutive books starting at `cfg.start`.
pub fn generate_books(cfg: &SynthConfig) -> Result<Vec<AuctionBook>> {
    if cfg.days == 0 || cfg.traders == 0 {
        return Err(Error::Argument(
            "need at least one day and one trader".into(),
        ));
    }
    if cfg.price_ar.is_nan() || cfg.price_ar.abs() >= 1.0 {
        return Err(Error::Argument(format!(
            "price AR coefficient {} is not stationary",
            cfg.price_ar
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut traders = Vec::new();
    for side in [Side::Offer, Side::Bid] {
        for _ in 0..cfg.traders {
            let markup = match side {
                Side::Offer => rng.random_range(-6.0..10.0),
                Side::Bid => rng.random_range(-10.0..6.0),
            };
            traders.push(Trader {
                side,
                markup,
                qty: rng.random_range(2000.0..8000.0),
                activity: rng.random_range(0.7..1.0),
            });
        }
    }
    let stationary_sd = cfg.price_sd / (1.0 - cfg.price_ar * cfg.price_ar).sqrt();
    let mut level = cfg.base_price + stationary_sd * unit.sample(&mut rng);
    let mut books = Vec::with_capacity(cfg.days);
    for d in 0..cfg.days {
        let day = cfg
            .start
            .checked_add_days(Days::new(d as u64))
            .ok_or_else(|| Error::Argument("date overflow".into()))?;
        if d > 0 {
            level = cfg.base_price
                + cfg.price_ar * (level - cfg.base_price)
                + cfg.price_sd * unit.sample(&mut rng);
        }
        let mut orders = Vec::new();
        let mut body = [0.0_f64; 2];
        for (i, t) in traders.iter().enumerate() {
            if !rng.random_bool(t.activity) {
                continue;
            }
            let price = round_to((level + t.markup + unit.sample(&mut rng)).max(0.01), 0.01);
            let qty = round_to(t.qty * (0.2 * unit.sample(&mut rng)).exp(), 1.0).max(1.0);
            body[usize::from(t.side == Side::Bid)] += qty;
            orders.push(Order {
                side: t.side,
                price,
                qty,
                day,
                op: Some(format!("T{i:02}")),
            });
        }
        if cfg.pipeline_manager {
            for (side, price) in [(Side::Bid, 60.0), (Side::Offer, 0.0)] {
                let qty = round_to(rng.random_range(5000.0..20000.0), 1.0);
                body[usize::from(side == Side::Bid)] += qty;
                orders.push(Order {
                    side,
                    price,
                    qty,
                    day,
                    op: Some("PM".into()),
                });
            }
        }
        let offer_tail = round_to(level.max(0.0) + 30.0, 0.01);
        for (side, price) in [(Side::Offer, offer_tail), (Side::Bid, 0.0)] {
            let have = body[usize::from(side == Side::Bid)];
            orders.push(Order {
                side,
                price,
                qty: (cfg.domain_hi * 1.25 - have)
                    .max(cfg.domain_hi * 0.25)
                    .round(),
                day,
                op: Some("TAIL".into()),
            });
        }
        books.push(AuctionBook::new(day, orders)?);
    }
    Ok(books)
}
