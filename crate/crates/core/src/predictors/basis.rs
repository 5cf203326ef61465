use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::func::Grid;

/// A finite set of basis functions evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    grid: Grid,
    functions: Vec<Vec<f64>>,
}

impl Basis {
    pub fn new(grid: Grid, functions: Vec<Vec<f64>>) -> Result<Self> {
        if functions.is_empty() || functions.iter().any(|f| f.len() != grid.len()) {
            return Err(Error::Shape(
                "basis functions must match the grid length".into(),
            ));
        }
        Ok(Basis { grid, functions })
    }

    /// `(1, sin(2πq)/√(1/2), cos(2πq)/√(1/2))` on `[0, 1]`; orthonormal in L².
    pub fn fourier3(grid: Grid) -> Self {
        let norm = 0.5_f64.sqrt();
        let pts = grid.points();
        let functions = vec![
            vec![1.0; grid.len()],
            pts.iter().map(|q| (2.0 * PI * q).sin() / norm).collect(),
            pts.iter().map(|q| (2.0 * PI * q).cos() / norm).collect(),
        ];
        Basis { grid, functions }
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn function(&self, i: usize) -> &[f64] {
        &self.functions[i]
    }

    /// Inner products of `values` with each basis function (trapezoidal rule).
    pub fn project(&self, values: &[f64]) -> DVector<f64> {
        let mut prod = vec![0.0; self.grid.len()];
        DVector::from_iterator(
            self.dim(),
            self.functions.iter().map(|f| {
                for ((p, a), b) in prod.iter_mut().zip(f).zip(values) {
                    *p = a * b;
                }
                self.grid.integrate(&prod)
            }),
        )
    }

    /// `g'(q) c` on the grid.
    pub fn expand(&self, coefs: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (f, c) in self.functions.iter().zip(coefs.iter()) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_basis_is_orthonormal_on_grid() {
        let b = Basis::fourier3(Grid::unit(100).unwrap());
        for i in 0..3 {
            let c = b.project(b.function(i));
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c[j] - want).abs() < 1e-12, "<g{i}, g{j}> = {}", c[j]);
            }
        }
    }

    #[test]
    fn expand_then_project_is_identity() {
        let b = Basis::fourier3(Grid::unit(64).unwrap());
        let c = DVector::from_vec(vec![0.3, -1.2, 2.5]);
        let back = b.project(&b.expand(&c));
        assert!((back - c).abs().max() < 1e-12);
    }
}
