//! Gas-market auction books: parsing, aggregate curves, equilibrium, and
//! conformal bands and prediction regions for the daily curves.

mod backtest;
mod curve;
mod equilibrium;
mod order;
mod region;
pub mod synth;
mod tabular;
mod xml;

pub use backtest::{
    backtest_csv, evaluate_day, market_grid, run_backtest, BacktestConfig, BacktestRecord,
    BacktestReport, BacktestSummary, DayFit, MarketDay, MarketHistory, WindowConfig,
};
pub use curve::{build_curves, CurveKind, StepCurve};
pub use equilibrium::{equilibrium, Equilibrium, PriceConvention};
pub use order::{AuctionBook, Order, Side};
pub use region::{
    inject_on_grid, intersection_region, remove_on_grid, tighten_band, PredictionRegion,
    RegionSlice, SideBand, Tightened,
};
pub use synth::{generate_books, SynthConfig};
pub use tabular::{parse_csv, to_csv};
pub use xml::{parse_xml, to_xml};

use crate::error::ParseError;

/// On-disk layout of auction books.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookFormat {
    Xml,
    Csv,
}

impl BookFormat {
    /// Guesses from the file extension (`.xml` or `.csv`).
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xml" => Some(BookFormat::Xml),
            "csv" => Some(BookFormat::Csv),
            _ => None,
        }
    }
}

/// Parses one file into its books (an XML file holds a single day).
pub fn parse_books(bytes: &[u8], format: BookFormat) -> Result<Vec<AuctionBook>, ParseError> {
    match format {
        BookFormat::Xml => parse_xml(bytes).map(|b| vec![b]),
        BookFormat::Csv => parse_csv(bytes),
    }
}
