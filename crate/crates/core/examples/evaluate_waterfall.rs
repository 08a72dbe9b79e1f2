//! Score updated against non-updated forecasts on a best-case test set and
//! write plot-ready traces and the waterfall grid.
//!
//! Run with `cargo run --release --example evaluate_waterfall [out-dir]`.

use gmm_intraday::evaluate::{evaluate, EvalConfig};
use gmm_intraday::metrics::{DatasetTag, Variant};
use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::{build_best_case_set, build_forecasts};

fn main() -> gmm_intraday::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/evaluate_waterfall".into());
    let gt = GroundTruth::new(GeneratorConfig {
        seed: 21,
        ..GeneratorConfig::default()
    })?;
    let conditions = gt.conditions(200, 1);
    let forecasts = build_forecasts(&gt, &conditions, 10, 2)?;
    let set = build_best_case_set(&forecasts, 3)?;

    let mut cfg = EvalConfig::new(4);
    cfg.dataset = DatasetTag::BestCase;
    let report = evaluate(&set.profiles(), &forecasts, &cfg)?;

    println!("T'    NLL upd   NLL nu    MAE upd  MAE nu   CRPS upd CRPS nu");
    for tp in (0..24).step_by(3) {
        let v = |m: &str, var| report.trace(m, var).and_then(|t| t.get(tp)).unwrap_or(f64::NAN);
        println!(
            "{tp:2}  {:9.3} {:9.3}  {:8.4} {:8.4}  {:8.4} {:8.4}",
            v("nll", Variant::Updated),
            v("nll", Variant::NonUpdated),
            v("mae", Variant::Updated),
            v("mae", Variant::NonUpdated),
            v("crps", Variant::Updated),
            v("crps", Variant::NonUpdated),
        );
    }

    let grid = &report.grids[&Variant::Updated];
    println!("\nAE(T', t) for t = 20..24");
    for tp in [0, 6, 12, 18] {
        let row: Vec<String> = (20..=24).map(|t| format!("{:.3}", grid.get(tp, t).unwrap())).collect();
        println!("T'={tp:2}  {}", row.join("  "));
    }

    std::fs::create_dir_all(&out).map_err(|e| gmm_intraday::Error::io(&out, e))?;
    gmm_intraday::io::write_traces(&report.traces, format!("{out}/traces.csv"))?;
    gmm_intraday::io::write_grid(&report.grids, format!("{out}/grid.csv"))?;
    println!("\nwrote {out}/traces.csv and {out}/grid.csv");
    Ok(())
}
