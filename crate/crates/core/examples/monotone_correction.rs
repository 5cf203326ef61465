//! Monotone correction of predicted curves and band tightening.

use funcband::func::Grid;
use funcband::market::tighten_band;
use funcband::predictors::{monotone_correct, Direction};

fn main() -> funcband::Result<()> {
    let grid = Grid::new(0.0, 4.0, 5)?;
    let y = [0.0, 2.0, 1.0, 1.5, 3.0];
    println!(
        "{y:?} -> {:?}",
        monotone_correct(&y, &grid, Direction::Increasing)
    );
    let d = [5.0, 3.0, 4.0, 1.0, 2.0];
    println!(
        "{d:?} -> {:?} (decreasing)",
        monotone_correct(&d, &grid, Direction::Decreasing)
    );

    let t = tighten_band(
        &[0.0, 1.0, 0.5, 2.0, 1.5],
        &[3.0, 2.5, 4.0, 3.5, 5.0],
        Direction::Increasing,
    );
    println!(
        "tightened lower {:?}, upper {:?}, empty: {}",
        t.lower, t.upper, t.empty
    );
    Ok(())
}
