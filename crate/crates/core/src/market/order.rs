use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Supply offer; builds the increasing offer curve.
    Offer,
    /// Demand bid; builds the decreasing demand curve.
    Bid,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Offer => "offer",
            Side::Bid => "bid",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offer" => Ok(Side::Offer),
            "bid" | "demand" => Ok(Side::Bid),
            _ => Err(Error::Argument(format!(
                "side must be `offer` or `bid`, got `{s}`"
            ))),
        }
    }
}

/// A single order: `qty` MWh at `price` Euro/MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub side: Side,
    pub price: f64,
    pub qty: f64,
    pub day: NaiveDate,
    pub op: Option<String>,
}

impl Order {
    pub fn new(side: Side, price: f64, qty: f64, day: NaiveDate) -> Result<Self> {
        let o = Order {
            side,
            price,
            qty,
            day,
            op: None,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn with_operator(mut self, op: impl Into<String>) -> Self {
        self.op = Some(op.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.price.is_finite() && self.price >= 0.0) {
            return Err(Error::Argument(format!(
                "price must be finite and >= 0, got {}",
                self.price
            )));
        }
        if !(self.qty.is_finite() && self.qty > 0.0) {
            return Err(Error::Argument(format!(
                "quantity must be positive, got {}",
                self.qty
            )));
        }
        Ok(())
    }
}

/// All orders submitted for one auction day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionBook {
    pub day: NaiveDate,
    pub orders: Vec<Order>,
}

impl AuctionBook {
    pub fn new(day: NaiveDate, orders: Vec<Order>) -> Result<Self> {
        for (i, o) in orders.iter().enumerate() {
            o.validate()
                .map_err(|e| Error::Argument(format!("order {i}: {e}")))?;
            if o.day != day {
                return Err(Error::Argument(format!(
                    "order {i} is dated {} in the book for {day}",
                    o.day
                )));
            }
        }
        Ok(AuctionBook { day, orders })
    }

    pub fn side(&self, side: Side) -> impl Iterator<Item = &Order> {
        self.orders.iter().filter(move |o| o.side == side)
    }

    pub fn count(&self, side: Side) -> usize {
        self.side(side).count()
    }

    pub fn total_qty(&self, side: Side) -> f64 {
        self.side(side).map(|o| o.qty).sum()
    }

    /// Orders of the book plus `extra`.
    pub fn with_order(&self, extra: Order) -> Result<Self> {
        let mut orders = self.orders.clone();
        orders.push(Order {
            day: self.day,
            ..extra
        });
        AuctionBook::new(self.day, orders)
    }

    /// Orders of one operator only, or all orders except theirs.
    pub fn filter_operator(&self, op: &str, keep: bool) -> AuctionBook {
        AuctionBook {
            day: self.day,
            orders: self
                .orders
                .iter()
                .filter(|o| (o.op.as_deref() == Some(op)) == keep)
                .cloned()
                .collect(),
        }
    }
}

pub(crate) fn parse_day(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 29).unwrap()
    }

    #[test]
    fn rejects_bad_quantities_and_prices() {
        assert!(Order::new(Side::Bid, 12.0, 0.0, day()).is_err());
        assert!(Order::new(Side::Bid, f64::NAN, 1.0, day()).is_err());
        assert!(Order::new(Side::Offer, -1.0, 1.0, day()).is_err());
        assert!(Order::new(Side::Offer, 0.0, 1.0, day()).is_ok());
    }

    #[test]
    fn book_checks_dates() {
        let o = Order::new(Side::Bid, 12.0, 5.0, day().succ_opt().unwrap()).unwrap();
        assert!(AuctionBook::new(day(), vec![o]).is_err());
    }

    #[test]
    fn operator_filter_splits_the_book() {
        let a = Order::new(Side::Bid, 12.0, 5.0, day())
            .unwrap()
            .with_operator("PM");
        let b = Order::new(Side::Bid, 10.0, 3.0, day()).unwrap();
        let book = AuctionBook::new(day(), vec![a, b]).unwrap();
        assert_eq!(book.filter_operator("PM", true).orders.len(), 1);
        assert_eq!(book.filter_operator("PM", false).total_qty(Side::Bid), 3.0);
    }
}
