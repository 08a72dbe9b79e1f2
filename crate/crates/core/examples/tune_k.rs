//! Choose the number of mixture components by comparing best-case and
//! synthetic likelihood traces.
//!
//! Run with `cargo run --release --example tune_k`.

use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::{select_k, TuningSeeds};

fn main() -> gmm_intraday::Result<()> {
    let gt = GroundTruth::new(GeneratorConfig {
        seed: 8,
        ..GeneratorConfig::default()
    })?;
    let conditions = gt.conditions(128, 1);
    let report = select_k(&[2, 5, 10, 25, 50], &gt, &conditions, TuningSeeds::from_master(8), 1)?;

    println!("   K      gap   NLL best-case(T'=12)  NLL synthetic(T'=12)");
    for tr in &report.traces {
        println!(
            "{:4} {:8.3}   {:20.3}  {:20.3}",
            tr.k, report.gap[&tr.k], tr.best_case[&12], tr.synthetic[&12]
        );
    }
    println!("selected K = {}", report.k_star);
    Ok(())
}
