//! Rolling 90-day backtest on synthetic auction books, with and without the
//! pipeline manager's orders.
//!
//! cargo run --release --example gas_market_backtest [days]

use funcband::market::{
    generate_books, market_grid, run_backtest, BacktestConfig, MarketHistory, PriceConvention,
    SynthConfig,
};

fn main() -> funcband::Result<()> {
    let days = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(400);
    let books = generate_books(&SynthConfig {
        days,
        ..SynthConfig::default()
    })?;
    let cfg = BacktestConfig::default();
    for (label, keep_pm) in [("all operators", true), ("without PM", false)] {
        let books: Vec<_> = if keep_pm {
            books.clone()
        } else {
            books
                .iter()
                .map(|b| b.filter_operator("PM", false))
                .collect()
        };
        let history = MarketHistory::from_books(&books, market_grid(), PriceConvention::Crossing)?;
        let report = run_backtest(&history, &cfg)?;
        let s = &report.summary;
        let low: f64 = report
            .records
            .iter()
            .map(|r| r.range_sizes[0].0 + r.range_sizes[0].1)
            .sum::<f64>()
            / report.records.len() as f64;
        println!("{label}: {} days, alpha={}", s.days, s.alpha);
        println!(
            "  band containment {:.3} (offer {:.3}, demand {:.3}), region containment {:.3}, violations {}",
            s.band_rate, s.offer_rate, s.demand_rate, s.region_rate, s.region_violations
        );
        println!(
            "  mean size offer {:.4e}, demand {:.4e}, both sides on [0, 25000] {:.4e}",
            s.mean_size_offer, s.mean_size_demand, low
        );
    }
    Ok(())
}
