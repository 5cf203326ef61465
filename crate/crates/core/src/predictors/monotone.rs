use super::PointPredictor;
use crate::error::{Error, Result};
use crate::func::{FunctionalSample, Grid};
use crate::series::FunctionalSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Makes a predicted curve monotone.
///
/// Points where the curve attains its running extremum are kept. In between,
/// the curve is replaced by the segment joining the last extremum point `q'`
/// to the first later point `q''` that reaches the extremum again. When the
/// extremum is never reached again the curve stays flat at the extremum.
pub fn monotone_correct(values: &[f64], grid: &Grid, direction: Direction) -> Vec<f64> {
    // work on the increasing case; negate for decreasing
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    let y: Vec<f64> = values.iter().map(|v| sign * v).collect();
    let n = y.len();
    let mut out = y.clone();
    let mut peak = f64::NEG_INFINITY;
    let mut peak_at = 0;
    let mut i = 0;
    while i < n {
        if y[i] >= peak {
            peak = y[i];
            peak_at = i;
            i += 1;
            continue;
        }
        let Some(next) = (i + 1..n).find(|&x| y[x] >= peak) else {
            out[i..].fill(peak);
            break;
        };
        let (q0, q1) = (grid.point(peak_at), grid.point(next));
        let slope = (y[next] - peak) / (q1 - q0);
        for (k, v) in out.iter_mut().enumerate().take(next).skip(i) {
            *v = peak + (grid.point(k) - q0) * slope;
        }
        i = next;
    }
    out.into_iter().map(|v| sign * v).collect()
}

/// Wraps a predictor and monotone-corrects each component of its output.
#[derive(Debug, Clone)]
pub struct MonotoneCorrected<P> {
    inner: P,
    directions: Vec<Direction>,
}

impl<P> MonotoneCorrected<P> {
    pub fn new(inner: P, directions: Vec<Direction>) -> Self {
        MonotoneCorrected { inner, directions }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: PointPredictor> PointPredictor for MonotoneCorrected<P> {
    fn predict(&self, data: &FunctionalSeries, t: usize) -> Result<FunctionalSample> {
        let raw = self.inner.predict(data, t)?;
        if raw.p() != self.directions.len() {
            return Err(Error::Shape(format!(
                "{} directions for a {}-component prediction",
                self.directions.len(),
                raw.p()
            )));
        }
        raw.map_components(|j, c| monotone_correct(c, raw.grid(j), self.directions[j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_monotone(v: &[f64], d: Direction) -> bool {
        v.windows(2).all(|w| match d {
            Direction::Increasing => w[1] >= w[0],
            Direction::Decreasing => w[1] <= w[0],
        })
    }

    #[test]
    fn five_point_example() {
        let g = Grid::new(0.0, 4.0, 5).unwrap();
        let out = monotone_correct(&[0.0, 2.0, 1.0, 1.5, 3.0], &g, Direction::Increasing);
        let want = [0.0, 2.0, 7.0 / 3.0, 8.0 / 3.0, 3.0];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{out:?}");
        }
    }

    #[test]
    fn mirrored_for_decreasing() {
        let g = Grid::new(0.0, 4.0, 5).unwrap();
        let out = monotone_correct(&[0.0, -2.0, -1.0, -1.5, -3.0], &g, Direction::Decreasing);
        let want = [0.0, -2.0, -7.0 / 3.0, -8.0 / 3.0, -3.0];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn never_recovered_peak_extends_flat() {
        let g = Grid::unit(4).unwrap();
        let out = monotone_correct(&[1.0, 5.0, 2.0, 3.0], &g, Direction::Increasing);
        assert_eq!(out, vec![1.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn monotone_input_is_unchanged() {
        let g = Grid::unit(5).unwrap();
        let v = [0.0, 0.0, 1.0, 4.0, 4.5];
        assert_eq!(monotone_correct(&v, &g, Direction::Increasing), v.to_vec());
    }

    proptest! {
        #[test]
        fn output_is_monotone_idempotent_and_keeps_extrema(
            v in proptest::collection::vec(-10.0..10.0f64, 2..40),
            inc in any::<bool>(),
        ) {
            let d = if inc { Direction::Increasing } else { Direction::Decreasing };
            let g = Grid::unit(v.len()).unwrap();
            let once = monotone_correct(&v, &g, d);
            prop_assert!(is_monotone(&once, d));
            prop_assert_eq!(monotone_correct(&once, &g, d), once.clone());
            let mut ext = v[0];
            for (x, y) in v.iter().zip(&once) {
                let hit = match d {
                    Direction::Increasing => *x >= ext,
                    Direction::Decreasing => *x <= ext,
                };
                if hit {
                    ext = *x;
                    prop_assert_eq!(x, y);
                }
            }
        }
    }
}
