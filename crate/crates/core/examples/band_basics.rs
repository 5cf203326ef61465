//! One conformal band end to end: simulate, fit, calibrate, test membership.

use funcband::conformal::{conformal_band, p_value_oracle, BlockScheme, SplitPlan};
use funcband::func::{band_contains, band_size};
use funcband::simlab::{build_predictor, simulate_series, DgpConfig, ModelKind};

fn main() -> funcband::Result<()> {
    let dgp = DgpConfig {
        t_len: 50,
        seed: 11,
        ..DgpConfig::default()
    };
    let sim = simulate_series(&dgp)?;
    let data = sim.observed();
    let (l, b, alpha) = (23, 1, 0.25);
    let model = ModelKind::Var(2);
    let plan = SplitPlan::contiguous(dgp.t_len, l, model.lag())?;
    let scheme = BlockScheme::new(l, b)?;
    let fit = build_predictor(model, &dgp, &data, plan.train())?;
    let bf = conformal_band(&*fit, &data, &plan, &scheme, alpha)?;

    println!(
        "m = {} training curves, l = {l} calibration curves",
        plan.m()
    );
    println!("k = {:?}", bf.band.half_width());
    println!("band size = {:.4}", band_size(&bf.band)?);
    let covered = band_contains(&bf.band, sim.truth())?;
    let p = p_value_oracle(sim.truth(), &*fit, &data, &plan, &scheme, &bf.modulation)?;
    println!(
        "truth in band: {covered}; its conformal p-value {p:.3} (> alpha = {alpha}: {})",
        p > alpha
    );
    Ok(())
}
