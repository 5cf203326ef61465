//! Parse an auction book, build the aggregate curves, clear the market under
//! each price convention and add one extra bid.

use funcband::market::{build_curves, equilibrium, parse_xml, PriceConvention};

const BOOK: &str = r#"<?xml version="1.0"?>
<auction day="2020-01-29">
  <order side="offer" price="5" qty="10" op="A"/>
  <order side="offer" price="10" qty="10" op="B"/>
  <order side="bid" price="12" qty="15" op="C"/>
  <order side="bid" price="4" qty="10" op="PM"/>
</auction>
"#;

fn main() -> funcband::Result<()> {
    let book = parse_xml(BOOK.as_bytes())?;
    let (offer, demand) = build_curves(&book)?;
    println!(
        "offer steps {:?} at {:?}",
        offer.prices(),
        offer.breakpoints()
    );
    println!(
        "demand steps {:?} at {:?}",
        demand.prices(),
        demand.breakpoints()
    );
    for c in [
        PriceConvention::Midpoint,
        PriceConvention::Crossing,
        PriceConvention::MarginalOffer,
    ] {
        let e = equilibrium(&offer, &demand, c).expect("curves cross");
        println!("{c:?}: Q = {}, P = {}", e.q, e.p);
    }
    let more = demand.with_order(11.0, 3.0)?;
    let e = equilibrium(&offer, &more, PriceConvention::Crossing).expect("curves cross");
    println!("after a bid of 3 MWh at 11: Q = {}, P = {}", e.q, e.p);

    let broken = BOOK.replace(r#"qty="15""#, r#"qty="lots""#);
    if let Err(e) = parse_xml(broken.as_bytes()) {
        println!("malformed book: {e}");
    }
    Ok(())
}
