//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Seeds and tolerances are fixed here and not tuned after the fact. Exact
//! criteria (deterministic identities) make the run exit nonzero when they
//! fail. Statistical criteria compare a Monte Carlo estimate against a fixed
//! interval; a miss there is reported as FAIL with its z-score but does not
//! abort the run, since a correct implementation misses such a check at a
//! known rate.
//!
//! cargo test --release --test acceptance

use std::time::{Duration, Instant};

use funcband::conformal::{
    band_with_modulation, conformal_band, p_value_oracle, BlockScheme, SplitPlan,
};
use funcband::func::{band_contains, FunctionalSample, Grid};
use funcband::market::{
    generate_books, market_grid, parse_csv, parse_xml, run_backtest, to_csv, to_xml,
    BacktestConfig, MarketHistory, PriceConvention, SynthConfig, WindowConfig,
};
use funcband::predictors::{monotone_correct, Direction};
use funcband::simlab::{
    build_predictor, run_study, simulate_series, theorem_diagnostics, DgpConfig, DiagnosticsConfig,
    ModelKind, StudyConfig, Z99,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> funcband::Result<Outcome>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Exact,
    Statistical,
}

fn study(model: ModelKind, t_len: usize, l: usize, n_rep: usize) -> StudyConfig {
    let mut c = StudyConfig::new(model, t_len, l, 1, 0.25, n_rep);
    c.seed = SEED;
    c
}

fn exchangeability() -> funcband::Result<Outcome> {
    let mut c = study(ModelKind::Oracle, 25, 7, 2000);
    c.dgp = DgpConfig::iid();
    let r = run_study(&c)?;
    let half = Z99 * (0.75f64 * 0.25 / 2000.0).sqrt();
    Ok(outcome(
        (r.coverage - 0.75).abs() <= half,
        format!(
            "iid, l=7, b=1, N=2000: coverage {:.4}, need 0.75 +/- {half:.4}",
            r.coverage
        ),
    ))
}

fn oracle_cell() -> funcband::Result<Outcome> {
    let r = run_study(&study(ModelKind::Oracle, 25, 7, 1000))?;
    Ok(outcome(
        (0.737..=0.769).contains(&r.coverage),
        format!(
            "oracle b=1 T=25 N=1000: coverage {:.4}, need [0.737, 0.769]",
            r.coverage
        ),
    ))
}

fn fitted_cells() -> funcband::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    let se = (0.75f64 * 0.25 / 1000.0).sqrt();
    for model in [ModelKind::Var(2), ModelKind::Far(2)] {
        for (t_len, l) in [(25, 7), (50, 23)] {
            let r = run_study(&study(model, t_len, l, 1000))?;
            pass &= (r.coverage - 0.75).abs() <= 0.03;
            parts.push(format!(
                "{model} T={t_len} {:.4} (z={:+.2})",
                r.coverage,
                (r.coverage - 0.75) / se
            ));
        }
    }
    // The oracle has no estimation error, so on the same replications it
    // shows how much of any miss comes from the simulated data alone.
    let control: Vec<String> = [(25, 7), (50, 23)]
        .iter()
        .map(|&(t_len, l)| {
            run_study(&study(ModelKind::Oracle, t_len, l, 1000))
                .map(|r| format!("T={t_len} {:.4}", r.coverage))
        })
        .collect::<funcband::Result<_>>()?;
    Ok(outcome(
        pass,
        format!(
            "{}; need 0.75 +/- 0.03; oracle on the same replications: {}",
            parts.join(", "),
            control.join(", ")
        ),
    ))
}

fn size_pattern() -> funcband::Result<Outcome> {
    let mut medians = Vec::new();
    for (t_len, l) in [(25, 7), (50, 23), (100, 47)] {
        medians.push(
            run_study(&study(ModelKind::Oracle, t_len, l, 500))?
                .size
                .median,
        );
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let in_range = (5.085..=8.002).contains(&medians[0]);
    Ok(outcome(
        decreasing && in_range,
        format!(
            "oracle medians T=25,50,100: {:.3}, {:.3}, {:.3}; need strictly decreasing and T=25 in [5.085, 8.002]",
            medians[0], medians[1], medians[2]
        ),
    ))
}

fn brute_force() -> funcband::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0usize;
    let mut inside = 0usize;
    let mut total = 0usize;
    let mut skipped = Vec::new();
    for (l, b) in [(5, 1), (5, 3), (7, 1), (7, 3)] {
        let Ok(scheme) = BlockScheme::new(l, b) else {
            // (l+1)/b is not an integer, so the scheme does not exist.
            skipped.push(format!("(l={l},b={b})"));
            continue;
        };
        let alpha = scheme.min_alpha().max(0.25);
        let dgp = DgpConfig {
            t_len: 40,
            seed: SEED + l as u64 * 10 + b as u64,
            ..DgpConfig::default()
        };
        let sim = simulate_series(&dgp)?;
        let data = sim.observed();
        let model = ModelKind::Var(2);
        let plan = SplitPlan::contiguous(dgp.t_len, l, model.lag())?;
        let fit = build_predictor(model, &dgp, &data, plan.train())?;
        let bf = conformal_band(&*fit, &data, &plan, &scheme, alpha)?;
        let center = bf.band.center().component(0).to_vec();
        let s = bf.modulation.values(0).to_vec();
        let grid = *bf.band.grid(0);
        let k = bf.band.half_width().finite().unwrap_or(1.0);
        for n in 0..10_000 {
            let cand = if n % 2 == 0 {
                // A fresh draw from the same process.
                simulate_series(&DgpConfig {
                    t_len: 1,
                    seed: rng.random(),
                    ..dgp.clone()
                })?
                .truth()
                .clone()
            } else {
                let scale = k * rng.random_range(0.5..1.5);
                let (f, ph) = (rng.random_range(0.5..4.0), rng.random_range(0.0..6.3));
                let v: Vec<f64> = (0..grid.len())
                    .map(|i| center[i] + scale * s[i] * (f * grid.point(i) + ph).sin())
                    .collect();
                FunctionalSample::univariate(v, grid)?
            };
            let covered = band_contains(&bf.band, &cand)?;
            let p = p_value_oracle(&cand, &*fit, &data, &plan, &scheme, &bf.modulation)?;
            mismatches += usize::from(covered != (p > alpha));
            inside += usize::from(covered);
            total += 1;
        }
    }
    Ok(outcome(
        mismatches == 0 && inside > 0 && inside < total,
        format!(
            "{total} candidates ({inside} inside), {mismatches} mismatches between band membership and p > alpha; \
             no scheme exists for {}",
            skipped.join(" ")
        ),
    ))
}

fn block_scheme() -> funcband::Result<Outcome> {
    let s = BlockScheme::new(5, 3)?;
    let mut pass = s.d_set() == [6, 3];
    let mut checked = 0;
    for n in 2..=60usize {
        let l = n - 1;
        for b in (1..=n).filter(|b| n % b == 0) {
            let s = BlockScheme::new(l, b)?;
            let perms: Vec<Vec<usize>> = (1..=s.n_perms()).map(|i| s.permutation(i)).collect();
            let identity: Vec<usize> = (1..=n).collect();
            pass &= perms.contains(&identity);
            for p in &perms {
                let mut sorted = p.clone();
                sorted.sort();
                pass &= sorted == identity;
                for q in &perms {
                    let composed: Vec<usize> = (0..n).map(|t| p[q[t] - 1]).collect();
                    pass &= perms.contains(&composed);
                }
            }
            let mut d = s.d_set().to_vec();
            d.sort();
            let mut expected: Vec<usize> = (1..n / b).map(|j| j * b).collect();
            expected.push(n);
            pass &= d == expected;
            checked += 1;
        }
    }
    Ok(outcome(
        pass,
        format!("l=5,b=3 gives D={:?}; closure, bijection and D checked on {checked} (l,b) pairs with l+1 <= 60", s.d_set()),
    ))
}

fn scale_invariance() -> funcband::Result<Outcome> {
    let dgp = DgpConfig {
        t_len: 50,
        seed: SEED + 1,
        ..DgpConfig::default()
    };
    let sim = simulate_series(&dgp)?;
    let data = sim.observed();
    let model = ModelKind::Var(2);
    let plan = SplitPlan::contiguous(dgp.t_len, 23, model.lag())?;
    let scheme = BlockScheme::new(23, 1)?;
    let fit = build_predictor(model, &dgp, &data, plan.train())?;
    let base = conformal_band(&*fit, &data, &plan, &scheme, 0.25)?;
    let (lo0, hi0) = base.band.bounds(0).expect("finite band");
    let mut worst = 0.0f64;
    for lambda in [1e-3, 1.0, 1e3] {
        let b = band_with_modulation(
            &*fit,
            &data,
            &plan,
            &scheme,
            0.25,
            base.modulation.scaled(lambda)?,
        )?;
        let (lo, hi) = b.band.bounds(0).expect("finite band");
        for (x, y) in lo.iter().chain(&hi).zip(lo0.iter().chain(&hi0)) {
            worst = worst.max((x - y).abs() / y.abs().max(1e-300));
        }
    }
    Ok(outcome(
        worst < 1e-9,
        format!(
            "max relative bound change {worst:.2e} over lambda in {{1e-3, 1, 1e3}}, need < 1e-9"
        ),
    ))
}

fn monotone() -> funcband::Result<Outcome> {
    let grid = Grid::new(0.0, 4.0, 5)?;
    let got = monotone_correct(&[0.0, 2.0, 1.0, 1.5, 3.0], &grid, Direction::Increasing);
    let want = [0.0, 2.0, 7.0 / 3.0, 8.0 / 3.0, 3.0];
    let err = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let g = Grid::new(0.0, 1.0, 50)?;
    let mut broken = 0;
    for i in 0..10_000 {
        let dir = if i % 2 == 0 {
            Direction::Increasing
        } else {
            Direction::Decreasing
        };
        let y: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let once = monotone_correct(&y, &g, dir);
        let twice = monotone_correct(&once, &g, dir);
        let monotone = once.windows(2).all(|w| match dir {
            Direction::Increasing => w[1] >= w[0] - 1e-12,
            Direction::Decreasing => w[1] <= w[0] + 1e-12,
        });
        let same = once.iter().zip(&twice).all(|(a, b)| (a - b).abs() <= 1e-12);
        broken += usize::from(!(monotone && same));
    }
    Ok(outcome(
        err < 1e-9 && broken == 0,
        format!("example {got:.6?} (max error {err:.1e}); {broken} of 10000 random curves not monotone or not idempotent"),
    ))
}

fn region_theorem() -> funcband::Result<Outcome> {
    let books = generate_books(&SynthConfig {
        days: 400,
        seed: SEED + 7,
        ..SynthConfig::default()
    })?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, drop_pm) in [("all operators", false), ("without PM", true)] {
        let books: Vec<_> = if drop_pm {
            books
                .iter()
                .map(|b| b.filter_operator("PM", false))
                .collect()
        } else {
            books.clone()
        };
        let h = MarketHistory::from_books(&books, market_grid(), PriceConvention::Crossing)?;
        let s = run_backtest(&h, &BacktestConfig::default())?.summary;
        pass &= s.days >= 300 && s.region_violations == 0 && s.region_rate >= s.band_rate;
        parts.push(format!(
            "{label}: {} days, band {:.3}, region {:.3}, violations {}",
            s.days, s.band_rate, s.region_rate, s.region_violations
        ));
    }
    let m = WindowConfig::default().m();
    Ok(outcome(pass, format!("m={m}; {}", parts.join("; "))))
}

fn diagnostics() -> funcband::Result<Outcome> {
    let l = 7;
    let mut medians = Vec::new();
    for m in [15, 90, 950] {
        let mut c = study(ModelKind::Var(2), l + 2 + m, l, 200);
        c.seed = SEED;
        let mut cfg = DiagnosticsConfig::new(c);
        cfg.reference_draws = 2_000;
        let s = theorem_diagnostics(&cfg)?;
        assert_eq!(s.m, m);
        medians.push(s.median_rms_gap);
    }
    Ok(outcome(
        medians.windows(2).all(|w| w[1] < w[0]),
        format!(
            "var2 median RMS(R-R*) at m=15,90,950: {:.4}, {:.4}, {:.4}; need decreasing",
            medians[0], medians[1], medians[2]
        ),
    ))
}

fn parsers() -> funcband::Result<Outcome> {
    let golden = include_str!("data/golden_book.xml");
    let book = parse_xml(golden.as_bytes())?;
    let round_xml = to_xml(&book) == golden && parse_xml(to_xml(&book).as_bytes())? == book;
    let round_csv =
        parse_csv(to_csv(std::slice::from_ref(&book)).as_bytes())? == vec![book.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let head: String = golden.lines().take(12).collect::<Vec<_>>().join("\n") + "\n</auction>\n";
    let (mut panics, mut unstructured, mut errors) = (0, 0, 0);
    for _ in 0..10_000 {
        let mut v = head.as_bytes().to_vec();
        for _ in 0..rng.random_range(1..=4) {
            if v.is_empty() {
                break;
            }
            let i = rng.random_range(0..v.len());
            match rng.random_range(0..3) {
                0 => v[i] = rng.random(),
                1 => {
                    v.remove(i);
                }
                _ => v.truncate(i.max(1)),
            }
        }
        match std::panic::catch_unwind(|| parse_xml(&v)) {
            Err(_) => panics += 1,
            Ok(Err(e)) => {
                errors += 1;
                unstructured += usize::from(e.path.is_empty() || e.message.is_empty());
            }
            Ok(Ok(_)) => {}
        }
    }
    Ok(outcome(
        book.orders.len() == 1000 && round_xml && round_csv && panics == 0 && unstructured == 0,
        format!(
            "golden {} orders, xml round trip {round_xml}, csv round trip {round_csv}; 10000 mutations: \
             {errors} errors, {panics} panics, {unstructured} without path",
            book.orders.len()
        ),
    ))
}

fn main() {
    use Kind::{Exact, Statistical};
    let checks: [(&str, Kind, Check, Duration); 11] = [
        (
            "exchangeability",
            Statistical,
            exchangeability,
            Duration::from_secs(60),
        ),
        (
            "table1-oracle-cell",
            Statistical,
            oracle_cell,
            Duration::from_secs(120),
        ),
        (
            "table2-fitted-cells",
            Statistical,
            fitted_cells,
            Duration::from_secs(600),
        ),
        (
            "a1-size-pattern",
            Statistical,
            size_pattern,
            Duration::from_secs(300),
        ),
        (
            "brute-force-equivalence",
            Exact,
            brute_force,
            Duration::from_secs(60),
        ),
        ("block-scheme", Exact, block_scheme, Duration::from_secs(60)),
        (
            "scale-invariance",
            Exact,
            scale_invariance,
            Duration::from_secs(60),
        ),
        (
            "monotone-correction",
            Exact,
            monotone,
            Duration::from_secs(60),
        ),
        (
            "region-containment",
            Exact,
            region_theorem,
            Duration::from_secs(300),
        ),
        (
            "diagnostics-trend",
            Statistical,
            diagnostics,
            Duration::from_secs(600),
        ),
        ("parser-robustness", Exact, parsers, Duration::from_secs(60)),
    ];
    let (mut failed, mut exact_failed) = (0, 0);
    for (name, kind, check, budget) in checks {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let took = start.elapsed();
        let pass = pass && took <= budget;
        failed += usize::from(!pass);
        exact_failed += usize::from(!pass && kind == Exact);
        println!(
            "{} {name}: {detail} [{:.1}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of 11 criteria passed ({exact_failed} exact failures)",
        11 - failed
    );
    if exact_failed > 0 {
        std::process::exit(1);
    }
}
