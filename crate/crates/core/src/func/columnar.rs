//! Columnar text format for curves sharing one grid.
//!
//! ```text
//! grid <lo> <hi> <n> <p>
//! <q_0> <y_1(q_0)> ... <y_p(q_0)>
//! ...            (n rows)
//! ```
//!
//! A series is several such blocks back to back. Blank lines and lines
//! starting with `#` are ignored when reading.

use std::fmt::Write as _;

use super::{FunctionalSample, Grid};
use crate::error::{Error, ParseError, Result};

/// Appends one block for `sample`. All components must share a grid.
pub fn write_sample(out: &mut String, sample: &FunctionalSample) -> Result<()> {
    let grid = *sample.grid(0);
    if sample.grids().iter().any(|g| *g != grid) {
        return Err(Error::Shape(
            "columnar format needs every component on the same grid".into(),
        ));
    }
    let p = sample.p();
    writeln!(out, "grid {} {} {} {}", grid.lo(), grid.hi(), grid.len(), p).unwrap();
    for i in 0..grid.len() {
        write!(out, "{}", grid.point(i)).unwrap();
        for j in 0..p {
            write!(out, " {}", sample.component(j)[i]).unwrap();
        }
        out.push('\n');
    }
    Ok(())
}

pub fn write_series(samples: &[FunctionalSample]) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        write_sample(&mut out, s)?;
    }
    Ok(out)
}

/// Reads every block in `text`.
pub fn read_series(text: &str) -> Result<Vec<FunctionalSample>, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let mut out = Vec::new();
    while let Some((lineno, header)) = lines.next() {
        let block = format!("block[{}]", out.len());
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "grid" {
            return Err(ParseError::new(
                &block,
                Some(lineno),
                "expected header `grid lo hi n p`",
            ));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| ParseError::new(&block, Some(lineno), format!("bad {what} `{s}`")))
        };
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| ParseError::new(&block, Some(lineno), format!("bad {what} `{s}`")))
        };
        let (lo, hi) = (num(fields[1], "lo")?, num(fields[2], "hi")?);
        let (n, p) = (int(fields[3], "n")?, int(fields[4], "p")?);
        let grid = Grid::new(lo, hi, n)
            .map_err(|e| ParseError::new(&block, Some(lineno), e.to_string()))?;
        if p == 0 {
            return Err(ParseError::new(&block, Some(lineno), "p must be >= 1"));
        }
        let mut comps = vec![Vec::with_capacity(n); p];
        for i in 0..n {
            let (ln, row) = lines.next().ok_or_else(|| {
                ParseError::new(&block, None, format!("expected {n} rows, found {i}"))
            })?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != p + 1 {
                return Err(ParseError::new(
                    format!("{block}/row[{i}]"),
                    Some(ln),
                    format!("expected {} numbers, found {}", p + 1, vals.len()),
                ));
            }
            for (j, v) in vals[1..].iter().enumerate() {
                let x = v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        ParseError::new(
                            format!("{block}/row[{i}]"),
                            Some(ln),
                            format!("bad value `{v}`"),
                        )
                    })?;
                comps[j].push(x);
            }
        }
        let sample = FunctionalSample::on_grid(comps, grid)
            .map_err(|e| ParseError::new(&block, Some(lineno), e.to_string()))?;
        out.push(sample);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_rows() {
        let g = Grid::unit(3).unwrap();
        let s =
            FunctionalSample::on_grid(vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 0.0]], g).unwrap();
        let text = write_series(&[s]).unwrap();
        assert_eq!(text, "grid 0 1 3 2\n0 1 -1\n0.5 2 0.5\n1 3 0\n");
    }

    #[test]
    fn truncated_block_reports_location() {
        let err = read_series("grid 0 1 3 1\n0 1\n0.5 2\n").unwrap_err();
        assert_eq!(err.path, "block[0]");
        let err = read_series("grid 0 1 2 1\n0 1\n1 x\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(read_series("grid 0 1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn series_round_trip(
            vals in proptest::collection::vec(proptest::collection::vec(-1e6..1e6f64, 8), 1..4),
            lo in -10.0..0.0f64, width in 0.1..100.0f64,
        ) {
            let g = Grid::new(lo, lo + width, 4).unwrap();
            let samples: Vec<_> = vals.iter()
                .map(|v| FunctionalSample::on_grid(vec![v[..4].to_vec(), v[4..].to_vec()], g).unwrap())
                .collect();
            let back = read_series(&write_series(&samples).unwrap()).unwrap();
            prop_assert_eq!(back.len(), samples.len());
            for (a, b) in back.iter().zip(&samples) {
                for j in 0..2 {
                    for (x, y) in a.component(j).iter().zip(b.component(j)) {
                        prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                    }
                }
            }
        }
    }
}
