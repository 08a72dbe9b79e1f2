mod common;

use approx::assert_relative_eq;
use gmm_intraday::synthgen::{CovarianceStyle, GeneratorConfig, GroundTruth, PoolMode};
use gmm_intraday::tuning::{build_best_case_set, build_forecasts, build_synthetic_set, select_k, TuningSeeds};
use gmm_intraday::{CovarianceSpec, Error, MixtureForecast};

fn small(pool: u64, covariance: CovarianceStyle) -> GroundTruth {
    GroundTruth::new(GeneratorConfig {
        horizon: 3,
        covariance,
        pool: PoolMode::Finite { size: pool },
        seed: 77,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

#[test]
fn same_config_same_process() {
    let a = small(8, GeneratorConfig::default().covariance);
    let b = small(8, GeneratorConfig::default().covariance);
    let c = [0.3, -0.2];
    assert_eq!(a.component(&c, 5), b.component(&c, 5));
    assert_eq!(a.draw_day(&c, 9), b.draw_day(&c, 9));
    assert_eq!(a.conditions(10, 1), b.conditions(10, 1));
}

#[test]
fn diagonal_style_has_no_cross_covariance() {
    let gt = small(4, CovarianceStyle::Diagonal);
    let comp = gt.component(&[0.0, 0.0], 2);
    assert!(matches!(comp.cov(), CovarianceSpec::Diagonal { .. }));
    let m = comp.cov().materialize();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn mixture_over_every_pool_seed_is_the_pool_distribution() {
    let gt = small(5, GeneratorConfig::default().covariance);
    let cond = [0.1, 0.2];
    let exact = gt.exact_forecast(&cond).unwrap();
    // Find a forecast seed whose draws cover all five pool seeds.
    let seed = (0..)
        .find(|&s| {
            let mut seeds = gt.forecast_component_seeds(40, s);
            seeds.sort_unstable();
            seeds.dedup();
            seeds.len() == 5
        })
        .unwrap();
    let mut distinct = gt.forecast_component_seeds(40, seed);
    distinct.sort_unstable();
    distinct.dedup();
    let rebuilt =
        MixtureForecast::uniform("rebuilt", distinct.iter().map(|&s| gt.component(&cond, s)).collect()).unwrap();
    let mut rng = common::rng(5);
    for _ in 0..27 {
        let x = common::random_vec(&mut rng, 3, 0.6)
            .iter()
            .map(|v| v + 1.0)
            .collect::<Vec<_>>();
        let a = rebuilt.log_density(&x).unwrap().exp();
        let b = common::mixture_pdf(&exact, 0..3, &x);
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}

#[test]
fn forecast_seeds_nest_across_k() {
    let gt = small(64, CovarianceStyle::Diagonal);
    let big = gt.forecast_component_seeds(25, 3);
    assert_eq!(gt.forecast_component_seeds(5, 3), big[..5]);
}

#[test]
fn infinite_mode_has_no_exact_forecast() {
    let gt = GroundTruth::new(GeneratorConfig {
        horizon: 4,
        pool: PoolMode::Infinite,
        ..GeneratorConfig::default()
    })
    .unwrap();
    assert!(gt.exact_forecast(&[0.0, 0.0]).is_none());
    let fc = gt.approximate_forecast(&[0.0, 0.0], 6, 1).unwrap();
    assert_eq!(fc.k(), 6);
}

#[test]
fn config_validation_and_toml() {
    let cfg = GeneratorConfig::default();
    assert_eq!(GeneratorConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(GroundTruth::new(GeneratorConfig {
        horizon: 0,
        ..GeneratorConfig::default()
    })
    .is_err());
    assert!(matches!(
        GeneratorConfig::from_toml("horizon = \"x\""),
        Err(Error::Parse { line: 1, .. })
    ));
}

#[test]
fn test_sets_have_one_instance_per_condition() {
    let gt = small(16, GeneratorConfig::default().covariance);
    let conds = gt.conditions(9, 4);
    let synth = build_synthetic_set(&gt, &conds, 1);
    assert_eq!(synth.len(), 9);
    let fcs = build_forecasts(&gt, &conds, 3, 2).unwrap();
    let best = build_best_case_set(&fcs, 5).unwrap();
    assert_eq!(best.len(), 9);
    assert!(best.instances.iter().all(|i| i.generator.unwrap() < 3));
    assert_eq!(best.instances[0].id, fcs[0].id());
}

#[test]
fn tuning_is_reproducible_and_picks_from_the_grid() {
    let gt = GroundTruth::new(GeneratorConfig {
        horizon: 6,
        seed: 12,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let conds = gt.conditions(32, 1);
    let a = select_k(&[4, 2, 8], &gt, &conds, TuningSeeds::from_master(1), 1).unwrap();
    let b = select_k(&[2, 4, 8], &gt, &conds, TuningSeeds::from_master(1), 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.k_grid, vec![2, 4, 8]);
    assert!(a.k_grid.contains(&a.k_star));
    assert!(a.gap.values().all(|g| g.is_finite() && *g >= 0.0));
}
