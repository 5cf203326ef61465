//! Precompute bands for synthetic books, start the HTTP service on a free
//! port and ask what a 20000 MWh bid at 12 and at 25 Euro/MWh does to the
//! region. The 12 bid sits below the whole region and leaves it unchanged.

use std::io::{Read, Write};
use std::net::TcpStream;

use funcband::market::{
    generate_books, market_grid, MarketHistory, PriceConvention, SynthConfig, WindowConfig,
};
use funcband::server::{precompute, spawn, ArtifactStore};

fn request(
    addr: std::net::SocketAddr,
    method: &str,
    path: &str,
    body: &str,
) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = String::new();
    s.read_to_string(&mut out)?;
    Ok(out
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap_or(out))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let books = generate_books(&SynthConfig {
        days: 95,
        ..SynthConfig::default()
    })?;
    let history = MarketHistory::from_books(&books, market_grid(), PriceConvention::Crossing)?;
    let (index, days) = precompute(
        &history,
        &WindowConfig::default(),
        &[0.25, 0.5],
        None,
        None,
        None,
    )?;
    let day = index.days[0];
    let server = spawn(ArtifactStore::from_parts(index, days)?, "127.0.0.1:0")?;

    for price in [12.0, 25.0] {
        let body = format!(
            r#"{{"day":"{day}","alpha":0.25,"side":"demand","price":{price},"qty":20000}}"#
        );
        let reply: serde_json::Value =
            serde_json::from_str(&request(server.addr(), "POST", "/whatif", &body)?)?;
        let (base, modified) = (&reply["base"], &reply["modified"]);
        println!("extra bid of 20000 MWh at {price} Euro/MWh on {day}:");
        println!(
            "  base     support {}, observed point {}",
            base["support"], base["observed"]
        );
        println!(
            "  modified support {}, observed point {}",
            modified["support"], modified["observed"]
        );
        println!(
            "  region changed: {}",
            base["lo"] != modified["lo"] || base["hi"] != modified["hi"]
        );
    }
    let err = request(
        server.addr(),
        "GET",
        &format!("/bands?day={day}&alpha=0.001"),
        "",
    )?;
    println!("alpha too small: {err}");
    Ok(())
}
