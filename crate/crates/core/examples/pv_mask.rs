//! Evaluate a 15-minute PV-style day where the evening steps are left out of
//! the scores but still used as observations.
//!
//! Run with `cargo run --release --example pv_mask`.

use gmm_intraday::evaluate::{evaluate, EvalConfig};
use gmm_intraday::metrics::{StepMask, Variant};
use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::{build_forecasts, build_synthetic_set};

fn main() -> gmm_intraday::Result<()> {
    let mask = StepMask::pv();
    let gt = GroundTruth::new(GeneratorConfig {
        horizon: mask.horizon(),
        seed: 96,
        ..GeneratorConfig::default()
    })?;
    let conditions = gt.conditions(20, 1);
    let forecasts = build_forecasts(&gt, &conditions, 5, 2)?;
    let profiles = build_synthetic_set(&gt, &conditions, 3).profiles();

    let mut cfg = EvalConfig::new(4);
    cfg.t_primes = Some((0..mask.horizon()).step_by(8).collect());
    cfg.mask_window = mask.trailing_excluded();
    let report = evaluate(&profiles, &forecasts, &cfg)?;

    let mae_u = report.trace("mae", Variant::Updated).unwrap();
    let mae_nu = report.trace("mae", Variant::NonUpdated).unwrap();
    let nll = report.trace("nll", Variant::Updated).unwrap();
    println!("T'   MAE upd  MAE nu   NLL upd");
    for (&tp, v) in &nll.values {
        let cell = |t: Option<f64>| t.map_or("      -".to_string(), |x| format!("{x:7.4}"));
        println!("{tp:2}  {}  {}  {v:8.2}", cell(mae_u.get(tp)), cell(mae_nu.get(tp)));
    }
    println!(
        "MAE stops at T' = {}: later update times have no scored steps left",
        mae_u.values.keys().last().unwrap()
    );
    Ok(())
}
