//! One-pass evaluation of updated and non-updated forecasts over a test set.
//!
//! For every instance and update time the updated mixture and the plain
//! marginal baseline are scored side by side. Each instance is processed
//! independently (in parallel when requested) and reduced in input order,
//! so results do not depend on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, ErrorClass, Result};
use crate::metrics::{
    average_columns, crps_from_pinball, default_levels, empirical_quantiles, instance_rmse, mean_abs_errors,
    pinball_sums, squared_errors, validate_levels, DatasetTag, PerformanceTrace, StepMask, Variant, WaterfallGrid,
};
use crate::mixture::MixtureForecast;
use crate::rng::derive_seed;
use crate::sampler::sample_ensemble;
use crate::update::{update, IntradayUpdate};

pub const VARIANTS: [Variant; 2] = [Variant::Updated, Variant::NonUpdated];

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Update times to evaluate; `None` means `0..T`.
    pub t_primes: Option<Vec<usize>>,
    pub levels: Vec<f64>,
    /// Ensemble size; `None` uses each forecast's `K`.
    pub ensemble_size: Option<usize>,
    pub seed: u64,
    /// Trailing steps excluded from the step averages.
    pub mask_window: usize,
    pub dataset: DatasetTag,
    pub caching: bool,
    pub threads: usize,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            t_primes: None,
            levels: default_levels(),
            ensemble_size: None,
            seed,
            mask_window: 0,
            dataset: DatasetTag::Real,
            caching: true,
            threads: 1,
        }
    }
}

/// Traces and grids for both variants, plus the instances left out.
#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub traces: Vec<PerformanceTrace>,
    pub grids: BTreeMap<Variant, WaterfallGrid>,
    /// Per update time: `(updated, non-updated)` NLL of each retained instance.
    pub paired_nll: BTreeMap<usize, Vec<(f64, f64)>>,
    /// `(instance id, T′)` pairs dropped from both variants after a numerical failure.
    pub failures: Vec<(String, usize)>,
    pub instances: usize,
}

impl EvaluationReport {
    pub fn trace(&self, metric: &str, variant: Variant) -> Option<&PerformanceTrace> {
        self.traces.iter().find(|t| t.metric == metric && t.variant == variant)
    }
}

#[derive(Debug)]
struct VariantScores {
    nll: f64,
    abs_err: Vec<f64>,
    pinball: Vec<f64>,
    sq_err: Vec<f64>,
}

type InstanceRow = Vec<(usize, Result<[VariantScores; 2]>)>;

pub fn evaluate(profiles: &[Vec<f64>], forecasts: &[MixtureForecast], cfg: &EvalConfig) -> Result<EvaluationReport> {
    if profiles.len() != forecasts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} profiles but {} forecasts",
            profiles.len(),
            forecasts.len()
        )));
    }
    let Some(first) = forecasts.first() else {
        return Err(Error::ShapeMismatch("empty test set".into()));
    };
    let horizon = first.horizon();
    for (n, (x, fc)) in profiles.iter().zip(forecasts).enumerate() {
        if fc.horizon() != horizon || x.len() != horizon {
            return Err(Error::ShapeMismatch(format!(
                "instance {n} does not span the common horizon {horizon}"
            )));
        }
    }
    validate_levels(&cfg.levels)?;
    if let Some(s) = cfg.ensemble_size {
        if s < 2 {
            return Err(Error::InvalidSampleCount);
        }
    } else if forecasts.iter().any(|f| f.k() < 2) {
        return Err(Error::InvalidConfig(
            "ensemble size defaults to K, which must be at least 2 for quantiles".into(),
        ));
    }
    let t_primes = cfg.t_primes.clone().unwrap_or_else(|| (0..horizon).collect());
    if let Some(&bad) = t_primes.iter().find(|&&tp| tp >= horizon) {
        return Err(Error::InvalidUpdateTime { t_prime: bad, horizon });
    }
    let mask = StepMask::trailing(horizon, cfg.mask_window);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rows: Vec<InstanceRow> = pool.install(|| {
        profiles
            .par_iter()
            .zip(forecasts.par_iter())
            .map(|(x, fc)| score_instance(x, fc, &t_primes, cfg))
            .collect()
    });

    reduce(rows, forecasts, &t_primes, &mask, cfg)
}

fn score_instance(x: &[f64], fc: &MixtureForecast, t_primes: &[usize], cfg: &EvalConfig) -> InstanceRow {
    let dense = fc.densified();
    let s = cfg.ensemble_size.unwrap_or(fc.k());
    t_primes
        .iter()
        .map(|&tp| {
            let scores = (|| {
                let updated = update(&dense, &x[..tp])?;
                let marginal = dense.marginalize(tp..dense.horizon())?;
                let baseline = update(&marginal, &[])?;
                Ok([
                    score_variant(x, updated, s, tp, Variant::Updated, cfg)?,
                    score_variant(x, baseline, s, tp, Variant::NonUpdated, cfg)?,
                ])
            })();
            (tp, scores)
        })
        .collect()
}

fn score_variant(
    x: &[f64],
    upd: IntradayUpdate<'_>,
    s: usize,
    t_prime: usize,
    variant: Variant,
    cfg: &EvalConfig,
) -> Result<VariantScores> {
    let upd = if cfg.caching { upd } else { upd.without_cache() };
    let future = &x[t_prime..];
    let nll = -upd.predictive_log_density(future)?;
    if !nll.is_finite() {
        return Err(Error::AllComponentsDegenerate);
    }
    let point = upd.mixture_mean()?;
    let seed = derive_seed(cfg.seed, variant.as_str(), t_prime as u64);
    let ens = sample_ensemble(&upd, s, seed)?;
    let qs = empirical_quantiles(&ens, &cfg.levels)?;
    Ok(VariantScores {
        nll,
        abs_err: mean_abs_errors(future, &ens)?,
        pinball: pinball_sums(future, &qs)?,
        sq_err: squared_errors(future, &point)?,
    })
}

fn reduce(
    rows: Vec<InstanceRow>,
    forecasts: &[MixtureForecast],
    t_primes: &[usize],
    mask: &StepMask,
    cfg: &EvalConfig,
) -> Result<EvaluationReport> {
    let mut failures = Vec::new();
    let mut by_t_prime: BTreeMap<usize, Vec<[VariantScores; 2]>> =
        t_primes.iter().map(|&tp| (tp, Vec::new())).collect();
    for (row, fc) in rows.into_iter().zip(forecasts) {
        for (tp, scores) in row {
            match scores {
                Ok(s) => by_t_prime.get_mut(&tp).expect("known update time").push(s),
                Err(e) if e.class() == ErrorClass::Numerical => failures.push((fc.id().to_string(), tp)),
                Err(e) => return Err(e),
            }
        }
    }

    let q = cfg.levels.len() as f64;
    let mut traces = Vec::new();
    let mut grids = BTreeMap::new();
    for (vi, variant) in VARIANTS.iter().enumerate() {
        let mut nll = PerformanceTrace::new("nll", *variant, cfg.dataset);
        let mut mae = PerformanceTrace::new("mae", *variant, cfg.dataset);
        let mut crps = PerformanceTrace::new("crps", *variant, cfg.dataset);
        let mut crps_raw = PerformanceTrace::new("crps_raw", *variant, cfg.dataset);
        let mut rmse = PerformanceTrace::new("rmse", *variant, cfg.dataset);
        let mut grid = WaterfallGrid::new();
        for (&tp, scores) in &by_t_prime {
            if scores.is_empty() {
                continue;
            }
            nll.values
                .insert(tp, scores.iter().map(|s| s[vi].nll).sum::<f64>() / scores.len() as f64);

            let abs: Vec<Vec<f64>> = scores.iter().map(|s| s[vi].abs_err.clone()).collect();
            let mut mae_cells = Vec::new();
            for (t, v) in average_columns(&abs, tp) {
                grid.insert(tp, t, v)?;
                if mask.includes(t) {
                    mae_cells.push(v);
                }
            }
            if !mae_cells.is_empty() {
                mae.values
                    .insert(tp, mae_cells.iter().sum::<f64>() / mae_cells.len() as f64);
            }

            let pin: Vec<Vec<f64>> = scores.iter().map(|s| s[vi].pinball.clone()).collect();
            if let Some(raw) = crps_from_pinball(&pin, tp, mask) {
                crps_raw.values.insert(tp, raw);
                crps.values.insert(tp, raw / q);
            }

            let roots: Vec<f64> = scores
                .iter()
                .filter_map(|s| instance_rmse(&s[vi].sq_err, tp, mask))
                .collect();
            if !roots.is_empty() {
                rmse.values.insert(tp, roots.iter().sum::<f64>() / roots.len() as f64);
            }
        }
        traces.extend([nll, mae, crps, crps_raw, rmse]);
        grids.insert(*variant, grid);
    }

    let paired_nll = by_t_prime
        .iter()
        .map(|(&tp, scores)| (tp, scores.iter().map(|s| (s[0].nll, s[1].nll)).collect()))
        .collect();

    Ok(EvaluationReport {
        traces,
        grids,
        paired_nll,
        failures,
        instances: forecasts.len(),
    })
}
