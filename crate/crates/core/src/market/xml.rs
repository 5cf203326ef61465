//! Auction book XML, schema version 1:
//!
//! ```xml
//! <auction day="2020-01-29" version="1">
//!   <order side="offer" price="12.5" qty="1000" op="T01"/>
//!   <order side="bid" price="14" qty="2500"/>
//! </auction>
//! ```
//!
//! `version` and `op` are optional. Prices are Euro/MWh, quantities MWh.
//! Errors carry the element path (`auction/order[3]`, 1-based) and line.

use std::fmt::Write as _;

use chrono::NaiveDate;
use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::order::{parse_day, AuctionBook, Order, Side};
use crate::error::ParseError;

fn line_of(text: &str, pos: u64) -> usize {
    let end = (pos as usize).min(text.len());
    text.as_bytes()[..end]
        .iter()
        .filter(|b| **b == b'\n')
        .count()
        + 1
}

struct Ctx<'a> {
    text: &'a str,
    pos: u64,
}

impl Ctx<'_> {
    fn err(&self, path: impl Into<String>, msg: impl Into<String>) -> ParseError {
        // the reader reports the end of the previous event; skip the trimmed whitespace
        let start = (self.pos as usize).min(self.text.len());
        let ws = self.text.as_bytes()[start..]
            .iter()
            .take_while(|b| b.is_ascii_whitespace())
            .count();
        ParseError::new(path, Some(line_of(self.text, (start + ws) as u64)), msg)
    }
}

/// Parses one auction day.
pub fn parse_xml(bytes: &[u8]) -> Result<AuctionBook, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = line_of(&String::from_utf8_lossy(bytes), e.valid_up_to() as u64);
        ParseError::new("document", Some(line), "input is not valid UTF-8")
    })?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut ctx = Ctx { text, pos: 0 };
    let mut day: Option<NaiveDate> = None;
    let mut orders = Vec::new();
    let mut open_order = false;
    let mut root_closed = false;
    loop {
        ctx.pos = reader.buffer_position();
        let event = reader.read_event().map_err(|e| {
            ctx.pos = reader.error_position();
            ctx.err(
                current_path(day.is_some(), orders.len(), open_order),
                format!("malformed XML: {e}"),
            )
        })?;
        let self_closing = matches!(event, Event::Empty(_));
        match event {
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Eof => break,
            _ if root_closed => {
                return Err(ctx.err("document", "content after the closing </auction>"))
            }
            Event::Start(e) | Event::Empty(e) if day.is_none() => {
                if e.name().as_ref() != b"auction" {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    return Err(ctx.err(
                        "document",
                        format!("root element must be <auction>, got <{}>", truncate(&name)),
                    ));
                }
                day = Some(parse_root(&e, &ctx)?);
                root_closed = self_closing;
            }
            Event::Start(e) | Event::Empty(e) => {
                let path = format!("auction/order[{}]", orders.len() + 1);
                if open_order {
                    return Err(ctx.err(
                        format!("{path}/{}", String::from_utf8_lossy(e.name().as_ref())),
                        "<order> must be empty",
                    ));
                }
                if e.name().as_ref() != b"order" {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    return Err(ctx.err(
                        format!("auction/{name}"),
                        format!("unexpected element <{name}>"),
                    ));
                }
                orders.push(parse_order(&e, day.expect("root seen"), &path, &ctx)?);
                open_order = !self_closing;
            }
            Event::End(e) => {
                if open_order && e.name().as_ref() == b"order" {
                    open_order = false;
                } else if e.name().as_ref() == b"auction" {
                    root_closed = true;
                } else {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    return Err(ctx.err(
                        current_path(true, orders.len(), open_order),
                        format!("unexpected </{name}>"),
                    ));
                }
            }
            Event::Text(t) => {
                let path = current_path(day.is_some(), orders.len(), open_order);
                let body = t.decode().map(|c| c.into_owned()).unwrap_or_default();
                return Err(ctx.err(path, format!("unexpected text `{}`", truncate(&body))));
            }
            Event::CData(_) | Event::GeneralRef(_) => {
                let path = current_path(day.is_some(), orders.len(), open_order);
                return Err(ctx.err(path, "unexpected character data"));
            }
        }
    }
    let Some(day) = day else {
        return Err(ctx.err("document", "no <auction> element"));
    };
    if !root_closed {
        return Err(ctx.err("auction", "missing </auction>"));
    }
    if orders.is_empty() {
        return Err(ctx.err("auction", "no orders"));
    }
    AuctionBook::new(day, orders).map_err(|e| ParseError::new("auction", None, e.to_string()))
}

fn truncate(s: &str) -> String {
    s.chars().take(24).collect()
}

fn current_path(in_root: bool, n_orders: usize, open_order: bool) -> String {
    match (in_root, open_order) {
        (false, _) => "document".into(),
        (true, true) => format!("auction/order[{n_orders}]"),
        (true, false) => "auction".into(),
    }
}

fn attributes<'a>(
    e: &'a BytesStart<'a>,
    path: &str,
    ctx: &Ctx,
) -> Result<Vec<(String, String)>, ParseError> {
    let mut out = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(|err| ctx.err(path, format!("bad attribute: {err}")))?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|err| ctx.err(path, format!("bad value for `{key}`: {err}")))?
            .into_owned();
        out.push((key, value));
    }
    Ok(out)
}

fn parse_root(e: &BytesStart, ctx: &Ctx) -> Result<NaiveDate, ParseError> {
    let mut day = None;
    for (k, v) in attributes(e, "auction", ctx)? {
        match k.as_str() {
            "day" => {
                day = Some(parse_day(&v).ok_or_else(|| {
                    ctx.err(
                        "auction",
                        format!("day `{}` is not YYYY-MM-DD", truncate(&v)),
                    )
                })?)
            }
            "version" if v == "1" => {}
            "version" => {
                return Err(ctx.err(
                    "auction",
                    format!("unsupported schema version `{}`", truncate(&v)),
                ))
            }
            _ => return Err(ctx.err("auction", format!("unknown attribute `{}`", truncate(&k)))),
        }
    }
    day.ok_or_else(|| ctx.err("auction", "missing mandatory attribute `day`"))
}

fn parse_order(e: &BytesStart, day: NaiveDate, path: &str, ctx: &Ctx) -> Result<Order, ParseError> {
    let (mut side, mut price, mut qty, mut op) = (None, None, None, None);
    for (k, v) in attributes(e, path, ctx)? {
        let number = |what: &str| -> Result<f64, ParseError> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    ctx.err(
                        path,
                        format!("{what} `{}` is not a finite number", truncate(&v)),
                    )
                })
        };
        match k.as_str() {
            "side" => {
                side = Some(match v.as_str() {
                    "offer" => Side::Offer,
                    "bid" => Side::Bid,
                    _ => {
                        return Err(ctx.err(
                            path,
                            format!("side `{}` must be offer or bid", truncate(&v)),
                        ))
                    }
                })
            }
            "price" => price = Some(number("price")?),
            "qty" => qty = Some(number("qty")?),
            "op" => op = Some(v.clone()),
            _ => return Err(ctx.err(path, format!("unknown attribute `{}`", truncate(&k)))),
        }
    }
    let missing = |name| ctx.err(path, format!("missing mandatory attribute `{name}`"));
    let order = Order {
        side: side.ok_or_else(|| missing("side"))?,
        price: price.ok_or_else(|| missing("price"))?,
        qty: qty.ok_or_else(|| missing("qty"))?,
        day,
        op,
    };
    order.validate().map_err(|e| ctx.err(path, e.to_string()))?;
    Ok(order)
}

/// Serializes a book; `parse_xml(to_xml(b)) == b` field for field.
pub fn to_xml(book: &AuctionBook) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        s,
        "<auction day=\"{}\" version=\"1\">",
        book.day.format("%Y-%m-%d")
    )
    .unwrap();
    for o in &book.orders {
        write!(
            s,
            "  <order side=\"{}\" price=\"{}\" qty=\"{}\"",
            o.side, o.price, o.qty
        )
        .unwrap();
        if let Some(op) = &o.op {
            write!(s, " op=\"{}\"", escape(op.as_str())).unwrap();
        }
        s.push_str("/>\n");
    }
    s.push_str("</auction>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"<?xml version="1.0"?>
<auction day="2020-01-29">
  <order side="offer" price="5" qty="10" op="A"/>
  <order side="offer" price="10" qty="10"/>
  <order side="bid" price="12" qty="15" op="B &amp; C"></order>
  <order side="bid" price="4" qty="10"/>
</auction>
"#;

    #[test]
    fn parses_two_offers_and_two_bids() {
        let b = parse_xml(SMALL.as_bytes()).unwrap();
        assert_eq!(b.orders.len(), 4);
        assert_eq!(b.count(Side::Offer), 2);
        assert_eq!(b.count(Side::Bid), 2);
        assert_eq!(b.orders[2].op.as_deref(), Some("B & C"));
        assert_eq!(b.day.to_string(), "2020-01-29");
    }

    #[test]
    fn round_trip() {
        let b = parse_xml(SMALL.as_bytes()).unwrap();
        assert_eq!(parse_xml(to_xml(&b).as_bytes()).unwrap(), b);
    }

    #[test]
    fn empty_auction_has_no_orders() {
        let e = parse_xml(b"<auction day=\"2020-01-01\"></auction>").unwrap_err();
        assert!(e.message.contains("no orders"), "{e}");
        let e = parse_xml(b"<auction day=\"2020-01-01\"/>").unwrap_err();
        assert!(e.message.contains("no orders"), "{e}");
        assert!(parse_xml(b"").is_err());
    }

    #[test]
    fn errors_name_the_element_and_line() {
        let doc = "<auction day=\"2020-01-01\">\n<order side=\"bid\" price=\"1\" qty=\"2\"/>\n<order side=\"bid\" price=\"x\" qty=\"2\"/>\n</auction>";
        let e = parse_xml(doc.as_bytes()).unwrap_err();
        assert_eq!(e.path, "auction/order[2]");
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("price"));
    }

    #[test]
    fn missing_attribute_is_reported() {
        let e = parse_xml(b"<auction day=\"2020-01-01\"><order side=\"bid\" qty=\"2\"/></auction>")
            .unwrap_err();
        assert!(e.message.contains("`price`"), "{e}");
        let e = parse_xml(b"<auction><order side=\"bid\" price=\"1\" qty=\"2\"/></auction>")
            .unwrap_err();
        assert!(e.message.contains("`day`"), "{e}");
    }

    #[test]
    fn structural_errors() {
        for doc in [
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"1\" qty=\"2\"/>",
            "<auction day=\"2020-01-01\"><bid/></auction>",
            "<book day=\"2020-01-01\"/>",
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"1\" qty=\"2\"/></auction><auction/>",
            "<auction day=\"2020-01-01\">hello</auction>",
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"1\" qty=\"2\"><x/></order></auction>",
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"1\" qty=\"2\"></auction>",
            "<auction day=\"2020-13-01\"><order side=\"bid\" price=\"1\" qty=\"2\"/></auction>",
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"1\" qty=\"-2\"/></auction>",
            "<auction day=\"2020-01-01\"><order side=\"sell\" price=\"1\" qty=\"2\"/></auction>",
            "<auction day=\"2020-01-01\"><order side=\"bid\" price=\"inf\" qty=\"2\"/></auction>",
        ] {
            assert!(parse_xml(doc.as_bytes()).is_err(), "accepted {doc}");
        }
    }
}
