//! Draw intraday scenario ensembles and summarize them as quantile bands.
//!
//! Run with `cargo run --release --example sample_ensemble`.

use std::time::Instant;

use gmm_intraday::metrics::empirical_quantiles;
use gmm_intraday::synthgen::{GeneratorConfig, GroundTruth};
use gmm_intraday::{sample_day_ahead, sample_ensemble, update};

fn main() -> gmm_intraday::Result<()> {
    let gt = GroundTruth::new(GeneratorConfig {
        seed: 5,
        ..GeneratorConfig::default()
    })?;
    let condition = gt.conditions(1, 1).remove(0);
    let fc = gt.approximate_forecast(&condition, 50, 2)?;
    let day = gt.draw_day(&condition, 3).profile;

    let t_prime = 8;
    let day_ahead = sample_day_ahead(&fc, 1000, 4)?;
    let upd = update(&fc, &day[..t_prime])?;
    let intraday = sample_ensemble(&upd, 1000, 4)?;

    let levels = [0.05, 0.5, 0.95];
    let qa = empirical_quantiles(&day_ahead, &levels)?;
    let qi = empirical_quantiles(&intraday, &levels)?;
    println!(" t   truth   day-ahead 5/50/95        intraday 5/50/95");
    for j in 0..intraday.steps() {
        let t = t_prime + j;
        let band = |q: &[Vec<f64>], col: usize| format!("{:6.3} {:6.3} {:6.3}", q[0][col], q[1][col], q[2][col]);
        println!(
            "{:2}  {:6.3}   {}   {}",
            t + 1,
            day[t],
            band(qa.values(), t),
            band(qi.values(), j)
        );
    }

    // The same seed gives the same ensemble whether conditionals are cached or not.
    let cold = update(&fc, &day[..t_prime])?.without_cache();
    let start = Instant::now();
    let uncached = sample_ensemble(&cold, 1000, 4)?;
    let uncached_time = start.elapsed();
    let warm = update(&fc, &day[..t_prime])?;
    let start = Instant::now();
    let cached = sample_ensemble(&warm, 1000, 4)?;
    println!(
        "identical: {}; cached {:?}, uncached {:?}",
        cached == uncached,
        start.elapsed(),
        uncached_time
    );
    Ok(())
}
