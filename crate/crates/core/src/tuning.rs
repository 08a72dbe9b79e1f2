//! Choosing the number of mixture components `K`.
//!
//! For each candidate `K` the likelihood trace on a *best-case* set (days
//! drawn from the forecast mixtures themselves) is compared with the trace
//! on a *synthetic* set (fresh days from the underlying process). The `K`
//! with the smallest average absolute gap between the two traces wins.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{nll_trace, DatasetTag, PerformanceTrace, Variant};
use crate::mixture::MixtureForecast;
use crate::rng::derive_seed;
use crate::sampler::sample_day_ahead;
use crate::synthgen::GroundTruth;

/// Default candidate grid.
pub const DEFAULT_K_GRID: [usize; 6] = [2, 5, 10, 25, 50, 100];
/// Default number of tuning instances.
pub const DEFAULT_TUNING_INSTANCES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct TestInstance {
    pub id: String,
    pub condition: Vec<f64>,
    pub profile: Vec<f64>,
    /// Best-case sets: index of the mixture component the day was drawn
    /// from. Synthetic sets: the generator's component seed.
    pub generator: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub kind: DatasetTag,
    pub instances: Vec<TestInstance>,
}

impl TestSet {
    pub fn profiles(&self) -> Vec<Vec<f64>> {
        self.instances.iter().map(|i| i.profile.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// One day per forecast, drawn from that forecast's own mixture.
pub fn build_best_case_set(forecasts: &[MixtureForecast], seed: u64) -> Result<TestSet> {
    let instances = forecasts
        .iter()
        .map(|fc| {
            let ens = sample_day_ahead(fc, 1, seed)?;
            Ok(TestInstance {
                id: fc.id().to_string(),
                condition: fc.condition().to_vec(),
                profile: ens.trajectories().row(0).iter().copied().collect(),
                generator: Some(ens.components()[0] as u64),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TestSet {
        kind: DatasetTag::BestCase,
        instances,
    })
}

/// One fresh ground-truth day per condition.
pub fn build_synthetic_set(gt: &GroundTruth, conditions: &[Vec<f64>], seed: u64) -> TestSet {
    let instances = conditions
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let day = gt.draw_day(c, derive_seed(seed, "synthetic", n as u64));
            TestInstance {
                id: instance_id(n),
                condition: c.clone(),
                profile: day.profile,
                generator: Some(day.component_seed),
            }
        })
        .collect();
    TestSet {
        kind: DatasetTag::Synthetic,
        instances,
    }
}

/// Stable instance identifier used by generated datasets.
pub fn instance_id(n: usize) -> String {
    format!("day-{n:05}")
}

/// `K`-component forecasts for every condition, with paired seeds.
pub fn build_forecasts(gt: &GroundTruth, conditions: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<MixtureForecast>> {
    conditions
        .iter()
        .enumerate()
        .map(|(n, c)| {
            Ok(gt
                .approximate_forecast(c, k, derive_seed(seed, "forecast", n as u64))?
                .with_id(instance_id(n)))
        })
        .collect()
}

/// Average absolute difference of two traces over update times `1..T`.
pub fn trace_gap(a: &PerformanceTrace, b: &PerformanceTrace, horizon: usize) -> Result<f64> {
    let mut total = 0.0;
    for tp in 1..horizon {
        match (a.get(tp), b.get(tp)) {
            (Some(x), Some(y)) => total += (x - y).abs(),
            _ => {
                return Err(Error::ShapeMismatch(format!("trace missing update time {tp}")));
            }
        }
    }
    Ok(total / (horizon - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuningSeeds {
    pub forecast: u64,
    pub best_case: u64,
    pub synthetic: u64,
}

impl TuningSeeds {
    pub fn from_master(seed: u64) -> Self {
        Self {
            forecast: derive_seed(seed, "tune-forecast", 0),
            best_case: derive_seed(seed, "tune-best-case", 0),
            synthetic: derive_seed(seed, "tune-synthetic", 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTraces {
    pub k: usize,
    pub best_case: BTreeMap<usize, f64>,
    pub synthetic: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub k_grid: Vec<usize>,
    pub gap: BTreeMap<usize, f64>,
    pub k_star: usize,
    pub traces: Vec<KTraces>,
    pub instances: usize,
}

/// Smallest-gap `K`; ties go to the smaller `K`.
pub fn argmin_k(gap: &BTreeMap<usize, f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (&k, &g) in gap {
        if best.is_none_or(|(_, bg)| g < bg) {
            best = Some((k, g));
        }
    }
    best.map(|(k, _)| k)
}

/// Runs the best-case vs synthetic comparison for every `K` in the grid.
///
/// The conditions, the synthetic set and the per-instance forecast seeds
/// are shared by every `K`.
pub fn select_k(
    k_grid: &[usize],
    gt: &GroundTruth,
    conditions: &[Vec<f64>],
    seeds: TuningSeeds,
    threads: usize,
) -> Result<TuningReport> {
    if k_grid.is_empty() || k_grid.contains(&0) {
        return Err(Error::InvalidConfig("K grid must be non-empty and positive".into()));
    }
    if conditions.is_empty() {
        return Err(Error::InvalidConfig("no tuning conditions".into()));
    }
    let mut grid = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let horizon = gt.horizon();
    let synthetic = build_synthetic_set(gt, conditions, seeds.synthetic);
    let synth_profiles = synthetic.profiles();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let per_k: Vec<Result<(KTraces, f64)>> = pool.install(|| {
        grid.par_iter()
            .map(|&k| {
                let forecasts: Vec<MixtureForecast> = build_forecasts(gt, conditions, k, seeds.forecast)?
                    .iter()
                    .map(MixtureForecast::densified)
                    .collect();
                let best = build_best_case_set(&forecasts, seeds.best_case)?;
                let best_trace = nll_trace(
                    &best.profiles(),
                    &forecasts,
                    1..horizon,
                    Variant::Updated,
                    DatasetTag::BestCase,
                )?;
                let synth_trace = nll_trace(
                    &synth_profiles,
                    &forecasts,
                    1..horizon,
                    Variant::Updated,
                    DatasetTag::Synthetic,
                )?;
                let gap = trace_gap(&best_trace.trace, &synth_trace.trace, horizon)?;
                Ok((
                    KTraces {
                        k,
                        best_case: best_trace.trace.values,
                        synthetic: synth_trace.trace.values,
                    },
                    gap,
                ))
            })
            .collect()
    });

    let mut traces = Vec::with_capacity(grid.len());
    let mut gap = BTreeMap::new();
    for r in per_k {
        let (t, g) = r?;
        gap.insert(t.k, g);
        traces.push(t);
    }
    let k_star = argmin_k(&gap).expect("grid is non-empty");
    Ok(TuningReport {
        k_grid: grid,
        gap,
        k_star,
        traces,
        instances: conditions.len(),
    })
}
