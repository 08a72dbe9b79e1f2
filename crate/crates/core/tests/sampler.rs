mod common;

use gmm_intraday::{sample_day_ahead, sample_ensemble, update, CovarianceSpec, Error, MixtureForecast, MvnComponent};

fn two_bumps() -> MixtureForecast {
    let c = |m: f64| MvnComponent::new(vec![m, m, m], CovarianceSpec::diagonal(vec![0.5; 3]).unwrap()).unwrap();
    MixtureForecast::new("bumps", vec![c(-2.0), c(3.0)], vec![0.3, 0.7]).unwrap()
}

#[test]
fn same_seed_same_ensemble() {
    let fc = two_bumps();
    let upd = update(&fc, &[0.4]).unwrap();
    let a = sample_ensemble(&upd, 64, 5).unwrap();
    let b = sample_ensemble(&upd, 64, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_ensemble(&upd, 64, 6).unwrap());
}

#[test]
fn trace_prefixes_are_stable_across_sizes() {
    let fc = two_bumps();
    let upd = update(&fc, &[]).unwrap();
    let small = sample_ensemble(&upd, 10, 1).unwrap();
    let large = sample_ensemble(&upd, 40, 1).unwrap();
    assert_eq!(small.trajectories().rows(0, 10), large.trajectories().rows(0, 10));
}

#[test]
fn cache_state_does_not_change_draws() {
    let mut rng = common::rng(21);
    let fc = common::random_mixture(&mut rng, 6, 4);
    let obs = common::random_vec(&mut rng, 2, 1.0);
    let warm = update(&fc, &obs).unwrap();
    for k in 0..4 {
        warm.conditioned(k).unwrap();
    }
    let cold = update(&fc, &obs).unwrap();
    let off = update(&fc, &obs).unwrap().without_cache();
    let a = sample_ensemble(&warm, 200, 3).unwrap();
    assert_eq!(a, sample_ensemble(&cold, 200, 3).unwrap());
    assert_eq!(a, sample_ensemble(&off, 200, 3).unwrap());
    assert!((0..4).all(|k| !off.is_cached(k)));
}

#[test]
fn component_frequencies_follow_weights() {
    let fc = two_bumps();
    let s = 20_000;
    let ens = sample_day_ahead(&fc, s, 9).unwrap();
    let share = ens.components().iter().filter(|&&k| k == 1).count() as f64 / s as f64;
    let se = (0.7 * 0.3 / s as f64).sqrt();
    assert!((share - 0.7).abs() < 5.0 * se, "share {share}");
    assert_eq!(ens.steps(), 3);
    assert_eq!(ens.t_prime(), 0);
}

#[test]
fn zero_samples_rejected() {
    let fc = two_bumps();
    let upd = update(&fc, &[]).unwrap();
    assert!(matches!(sample_ensemble(&upd, 0, 1), Err(Error::InvalidSampleCount)));
}

#[test]
fn certain_component_is_always_chosen() {
    // Observation far into the second bump leaves it all the weight.
    let fc = two_bumps();
    let upd = update(&fc, &[3.0, 3.1]).unwrap();
    let ens = sample_ensemble(&upd, 500, 2).unwrap();
    assert!(ens.components().iter().all(|&k| k == 1));
    assert_eq!(ens.steps(), 1);
}
