//! Update a hand-built two-regime load forecast on the first hours of the day.
//!
//! Run with `cargo run --example condition_update`.

use gmm_intraday::{update, CovarianceSpec, MixtureForecast, MvnComponent};
use nalgebra::{DMatrix, DVector};

fn fmt(v: &DVector<f64>) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn regime(level: f64, slope: f64) -> MvnComponent {
    let t = 6;
    let mean: Vec<f64> = (0..t).map(|i| level + slope * i as f64).collect();
    // Exponentially decaying correlation between steps.
    let cov = DMatrix::from_fn(t, t, |i, j| 0.2 * 0.7f64.powi((i as i32 - j as i32).abs()));
    MvnComponent::new(mean, CovarianceSpec::dense(cov).unwrap()).unwrap()
}

fn main() -> gmm_intraday::Result<()> {
    let fc = MixtureForecast::new("tuesday", vec![regime(1.0, 0.1), regime(2.0, -0.2)], vec![0.6, 0.4])?;
    let day = [1.9, 1.75, 1.65, 1.4, 1.2, 0.95];

    println!("prior weights {:?}", fc.weights());
    println!("day-ahead mean [{}]", fmt(&fc.mean()));
    for t_prime in 0..day.len() {
        let upd = update(&fc, &day[..t_prime])?;
        let g = upd.gamma();
        println!(
            "T'={t_prime}  γ=[{:.4}, {:.4}]  mean of remaining steps [{}]",
            g[0],
            g[1],
            fmt(&upd.mixture_mean()?)
        );
    }

    let upd = update(&fc, &day[..3])?;
    let c = upd.conditioned(1)?;
    println!("regime 2 after three steps: mean [{}]", fmt(c.mean()));
    for row in c.cov().row_iter() {
        println!("  {}", fmt(&row.transpose()));
    }
    Ok(())
}
