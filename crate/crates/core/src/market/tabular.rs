//! Auction books as CSV with header `day,side,price,qty,op` (`op` may be empty).
//! A file may hold several days; rows are grouped by day.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::order::{parse_day, AuctionBook, Order, Side};
use crate::error::ParseError;

const HEADER: [&str; 5] = ["day", "side", "price", "qty", "op"];

/// Parses every book in the file, sorted by day. Lines starting with `#` are skipped.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<AuctionBook>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = rdr
        .headers()
        .map_err(|e| ParseError::new("header", Some(1), format!("unreadable header: {e}")))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER && names != HEADER[..4] {
        return Err(ParseError::new(
            "header",
            header.position().map(|p| p.line() as usize).or(Some(1)),
            format!("expected `{}`, got `{}`", HEADER.join(","), names.join(",")),
        ));
    }
    let mut days: BTreeMap<NaiveDate, Vec<Order>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let path = format!("row[{}]", i + 1);
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            ParseError::new(&path, line, format!("malformed CSV: {e}"))
        })?;
        let line = rec.position().map(|p| p.line() as usize);
        let err = |msg: String| ParseError::new(&path, line, msg);
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let day = parse_day(field(0))
            .ok_or_else(|| err(format!("day `{}` is not YYYY-MM-DD", field(0))))?;
        let side = match field(1) {
            "offer" => Side::Offer,
            "bid" => Side::Bid,
            other => return Err(err(format!("side `{other}` must be offer or bid"))),
        };
        let number = |k: usize, what: &str| {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(format!("{what} `{}` is not a finite number", field(k))))
        };
        let op = rec.get(4).filter(|s| !s.is_empty()).map(str::to_string);
        let order = Order {
            side,
            price: number(2, "price")?,
            qty: number(3, "qty")?,
            day,
            op,
        };
        order.validate().map_err(|e| err(e.to_string()))?;
        days.entry(day).or_default().push(order);
    }
    if days.is_empty() {
        return Err(ParseError::new("document", None, "no orders"));
    }
    days.into_iter()
        .map(|(day, orders)| {
            AuctionBook::new(day, orders)
                .map_err(|e| ParseError::new("document", None, e.to_string()))
        })
        .collect()
}

pub fn to_csv(books: &[AuctionBook]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for b in books {
        for o in &b.orders {
            let day = o.day.format("%Y-%m-%d").to_string();
            let (price, qty) = (o.price.to_string(), o.qty.to_string());
            w.write_record([
                day.as_str(),
                o.side.as_str(),
                &price,
                &qty,
                o.op.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
