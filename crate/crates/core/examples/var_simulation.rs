//! Functional VAR(2) data: stability check, simulated coefficients and a
//! least-squares refit of the lag matrices.

use funcband::predictors::fit_var;
use funcband::simlab::{simulate_series, spectral_radius, DgpConfig};

fn main() -> funcband::Result<()> {
    let dgp = DgpConfig {
        t_len: 2000,
        seed: 3,
        ..DgpConfig::default()
    };
    println!(
        "spectral radius of the companion matrix: {:.4}",
        spectral_radius(&dgp.psi1(), &dgp.psi2())
    );
    let sim = simulate_series(&dgp)?;
    let coefs: Vec<_> = sim
        .coefs
        .iter()
        .map(|c| nalgebra::DVector::from_column_slice(c.as_slice()))
        .collect();
    let targets: Vec<usize> = (3..=dgp.t_len).collect();
    let est = fit_var(&coefs, &targets, 2)?;
    println!("true Psi_1:{}estimated:{}", dgp.psi1(), est.matrix(1));
    println!("true Psi_2:{}estimated:{}", dgp.psi2(), est.matrix(2));
    Ok(())
}
