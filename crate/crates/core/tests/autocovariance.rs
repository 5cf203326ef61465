//! Long-run autocovariances of the simulated coefficient process against a
//! Lyapunov fixed point computed here with plain arrays.

use funcband::simlab::{simulate_series, DgpConfig};
use nalgebra::Matrix3;

type M3 = [[f64; 3]; 3];
type M6 = [[f64; 6]; 6];

fn to_arr(m: &Matrix3<f64>) -> M3 {
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    a
}

fn scaled(u: &M3) -> M3 {
    let norm = u.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    u.map(|r| r.map(|x| if norm == 0.0 { 0.0 } else { x / (2.0 * norm) }))
}

fn mul6(a: &M6, b: &M6) -> M6 {
    let mut c = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            c[i][j] = (0..6).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn transpose6(a: &M6) -> M6 {
    let mut t = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Returns `(Γ(0), Γ(1), Γ(2))` with `Γ(h) = E[y_{t+h} y_tᵀ]`.
fn oracle(cfg: &DgpConfig, innovation_var_factor: f64) -> [M3; 3] {
    let (p1, p2) = (
        scaled(&to_arr(&cfg.upsilon1)),
        scaled(&to_arr(&cfg.upsilon2)),
    );
    let sigma = to_arr(&cfg.sigma);
    let mut a = [[0.0; 6]; 6];
    let mut q = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = p1[i][j];
            a[i][j + 3] = p2[i][j];
            q[i][j] = sigma[i][j] * innovation_var_factor;
        }
        a[i + 3][i] = 1.0;
    }
    let at = transpose6(&a);
    // Γ = A Γ Aᵀ + Q; the companion radius is well below 1 so this converges fast.
    let mut g = q;
    for _ in 0..2000 {
        let mut next = mul6(&mul6(&a, &g), &at);
        for i in 0..6 {
            for j in 0..6 {
                next[i][j] += q[i][j];
            }
        }
        g = next;
    }
    let block = |g: &M6, r: usize, c: usize| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = g[r + i][c + j];
            }
        }
        m
    };
    let g0 = block(&g, 0, 0);
    let g1 = block(&g, 0, 3);
    // Γ(2) = Ψ₁Γ(1) + Ψ₂Γ(0).
    let mut g2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g2[i][j] = (0..3)
                .map(|k| p1[i][k] * g1[k][j] + p2[i][k] * g0[k][j])
                .sum();
        }
    }
    [g0, g1, g2]
}

fn sample_autocov(xs: &[[f64; 3]], h: usize) -> M3 {
    let n = xs.len() as f64;
    let mut mean = [0.0; 3];
    for x in xs {
        for i in 0..3 {
            mean[i] += x[i] / n;
        }
    }
    let mut c = [[0.0; 3]; 3];
    for t in h..xs.len() {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += (xs[t][i] - mean[i]) * (xs[t - h][j] - mean[j]) / n;
            }
        }
    }
    c
}

fn rel_err(a: &M3, b: &M3) -> f64 {
    let scale = b.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

fn check(df: Option<f64>, t_len: usize, tol: f64) {
    let cfg = DgpConfig {
        t_len,
        df,
        grid_n: 8,
        burn_in: 500,
        seed: 2024,
        ..DgpConfig::default()
    };
    let factor = df.map_or(1.0, |d| d / (d - 2.0));
    let expected = oracle(&cfg, factor);
    let sim = simulate_series(&cfg).unwrap();
    let xs: Vec<[f64; 3]> = sim.coefs.iter().map(|c| [c[0], c[1], c[2]]).collect();
    for (h, e) in expected.iter().enumerate() {
        let err = rel_err(&sample_autocov(&xs, h), e);
        assert!(
            err < tol,
            "df={df:?} lag {h}: relative error {err:.4} (tol {tol})"
        );
    }
}

#[test]
fn gaussian_autocovariances_match_the_lyapunov_solution() {
    check(None, 200_000, 0.03);
}

#[test]
fn student_t_autocovariances_match_with_the_variance_inflation() {
    // Finite variance but infinite fourth moment, so sampling error decays slowly.
    check(Some(4.0), 400_000, 0.08);
}

#[test]
fn iid_process_has_no_serial_correlation() {
    let cfg = DgpConfig {
        t_len: 100_000,
        df: None,
        grid_n: 8,
        ..DgpConfig::iid()
    };
    let sim = simulate_series(&cfg).unwrap();
    let xs: Vec<[f64; 3]> = sim.coefs.iter().map(|c| [c[0], c[1], c[2]]).collect();
    let g0 = sample_autocov(&xs, 0);
    assert!(rel_err(&g0, &to_arr(&cfg.sigma)) < 0.03);
    let g1 = sample_autocov(&xs, 1);
    assert!(g1.iter().flatten().all(|x| x.abs() < 0.02), "{g1:?}");
}
