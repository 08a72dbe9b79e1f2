//! Configure the synthetic generator from TOML and build best-case and
//! synthetic test sets from it.
//!
//! Run with `cargo run --example synthetic_data`.

use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::tuning::{build_best_case_set, build_forecasts, build_synthetic_set};

const CONFIG: &str = r#"
horizon = 12
harmonics = 2
amplitude_min = 0.3
amplitude_max = 0.8
base_level = 2.0
noise_scale = 0.1
seed = 17

[covariance]
style = "pdcc"
ridge = 0.001
length_scale = 2.0

[pool]
mode = "finite"
size = 16
"#;

fn main() -> gmm_intraday::Result<()> {
    let cfg = GeneratorConfig::from_toml(CONFIG)?;
    let gt = GroundTruth::new(cfg)?;
    let conditions = gt.conditions(4, 1);

    let forecasts = build_forecasts(&gt, &conditions, 8, 2)?;
    let best = build_best_case_set(&forecasts, 3)?;
    let synth = build_synthetic_set(&gt, &conditions, 4);

    for (b, s) in best.instances.iter().zip(&synth.instances) {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:5.2}")).collect::<Vec<_>>().join(" ");
        println!(
            "{}  condition {:?}",
            b.id,
            b.condition
                .iter()
                .map(|c| (c * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        );
        println!(
            "  best-case  (component {:>2})  {}",
            b.generator.unwrap(),
            fmt(&b.profile)
        );
        println!(
            "  synthetic  (pool seed {:>2})  {}",
            s.generator.unwrap(),
            fmt(&s.profile)
        );
    }

    let exact = gt.exact_forecast(&conditions[0]).expect("finite pool");
    println!("\nexact mixture over the pool has K = {}", exact.k());
    println!("\n{}", gt.config().to_toml());
    Ok(())
}
