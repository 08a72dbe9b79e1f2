//! Likelihood-, sample-, quantile- and point-based scores, aggregated into
//! performance traces over the update time `T′` and the `AE(T′, t)` grid.
//!
//! Time steps `t` are 1-based throughout this module (`t ∈ T′+1..=T`), which
//! is also how they appear in the trace and grid tables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::MixtureForecast;
use crate::sampler::Ensemble;
use crate::update::update;

/// 0.05, 0.10, …, 0.95.
pub fn default_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Updated,
    NonUpdated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetTag {
    Real,
    Synthetic,
    BestCase,
}

macro_rules! text_enum {
    ($ty:ty { $($variant:path => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $($variant => $text),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), other
                    ))),
                }
            }
        }
    };
}

text_enum!(Variant { Variant::Updated => "updated", Variant::NonUpdated => "non_updated" });
text_enum!(DatasetTag {
    DatasetTag::Real => "real",
    DatasetTag::Synthetic => "synthetic",
    DatasetTag::BestCase => "best_case",
});

/// Metric values indexed by update time.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTrace {
    pub metric: String,
    pub variant: Variant,
    pub dataset: DatasetTag,
    pub values: BTreeMap<usize, f64>,
}

impl PerformanceTrace {
    pub fn new(metric: impl Into<String>, variant: Variant, dataset: DatasetTag) -> Self {
        Self {
            metric: metric.into(),
            variant,
            dataset,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, t_prime: usize) -> Option<f64> {
        self.values.get(&t_prime).copied()
    }
}

/// `AE(T′, t)` for `t > T′`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaterfallGrid {
    values: BTreeMap<(usize, usize), f64>,
}

impl WaterfallGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t_prime: usize, t: usize, value: f64) -> Result<()> {
        if t <= t_prime {
            return Err(Error::ShapeMismatch(format!(
                "grid cell t={t} is not after t_prime={t_prime}"
            )));
        }
        self.values.insert((t_prime, t), value);
        Ok(())
    }

    pub fn get(&self, t_prime: usize, t: usize) -> Option<f64> {
        self.values.get(&(t_prime, t)).copied()
    }

    /// Cells in `(t_prime, t)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }

    pub fn t_primes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.values.keys().map(|(tp, _)| *tp).collect();
        out.dedup();
        out
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which time steps take part in metric averages. Excluded steps are still
/// used as observations when conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepMask {
    horizon: usize,
    trailing_excluded: usize,
}

impl StepMask {
    pub fn all(horizon: usize) -> Self {
        Self {
            horizon,
            trailing_excluded: 0,
        }
    }

    /// Excludes the last `window` steps of the day.
    pub fn trailing(horizon: usize, window: usize) -> Self {
        Self {
            horizon,
            trailing_excluded: window.min(horizon),
        }
    }

    /// PV-style mask: 15-minute resolution, evening steps after 17:00 dropped.
    pub fn pv() -> Self {
        Self::trailing(96, 28)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn trailing_excluded(&self) -> usize {
        self.trailing_excluded
    }

    /// Whether 1-based step `t` is scored.
    pub fn includes(&self, t: usize) -> bool {
        t >= 1 && t <= self.horizon - self.trailing_excluded
    }

    /// Scored steps among `T′+1..=T`.
    pub fn scored_after(&self, t_prime: usize) -> impl Iterator<Item = usize> + '_ {
        (t_prime + 1..=self.horizon).filter(move |t| self.includes(*t))
    }
}

/// Quantile forecasts for the steps after `t_prime`, one row per level.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSet {
    t_prime: usize,
    levels: Vec<f64>,
    /// `values[i][j]`: level `i`, step `t_prime + 1 + j`.
    values: Vec<Vec<f64>>,
}

impl QuantileSet {
    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidLevels("no levels".into()));
    }
    if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::InvalidLevels(format!("level {q} is not inside (0, 1)")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidLevels("levels must be strictly increasing".into()));
    }
    Ok(())
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at 1-based position `q (S − 1) + 1`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-step empirical quantiles of an ensemble.
pub fn empirical_quantiles(ens: &Ensemble, levels: &[f64]) -> Result<QuantileSet> {
    validate_levels(levels)?;
    if ens.size() < 2 {
        return Err(Error::InvalidSampleCount);
    }
    let traj = ens.trajectories();
    let mut values = vec![Vec::with_capacity(ens.steps()); levels.len()];
    let mut column = Vec::with_capacity(ens.size());
    for j in 0..ens.steps() {
        column.clear();
        column.extend(traj.column(j).iter().copied());
        column.sort_by(f64::total_cmp);
        for (i, &q) in levels.iter().enumerate() {
            values[i].push(quantile_sorted(&column, q));
        }
    }
    Ok(QuantileSet {
        t_prime: ens.t_prime(),
        levels: levels.to_vec(),
        values,
    })
}

/// Pinball loss of quantile forecast `y` at level `q` for outcome `x`.
pub fn pinball(q: f64, x: f64, y: f64) -> f64 {
    (q * (x - y)).max((1.0 - q) * (y - x))
}

fn check_future(truth_future: &[f64], steps: usize) -> Result<()> {
    if truth_future.len() != steps {
        return Err(Error::ShapeMismatch(format!(
            "truth has {} future steps, forecast has {steps}",
            truth_future.len()
        )));
    }
    Ok(())
}

/// `(1/S) Σ_s |x_t − x̂_{t,s}|` for each future step.
pub fn mean_abs_errors(truth_future: &[f64], ens: &Ensemble) -> Result<Vec<f64>> {
    check_future(truth_future, ens.steps())?;
    let s = ens.size() as f64;
    Ok(ens
        .trajectories()
        .column_iter()
        .zip(truth_future)
        .map(|(col, x)| col.iter().map(|v| (x - v).abs()).sum::<f64>() / s)
        .collect())
}

/// `Σ_i pinball(q_i, x_t, y_{t,i})` for each future step.
pub fn pinball_sums(truth_future: &[f64], qs: &QuantileSet) -> Result<Vec<f64>> {
    check_future(truth_future, qs.steps())?;
    Ok((0..qs.steps())
        .map(|j| {
            qs.levels
                .iter()
                .zip(&qs.values)
                .map(|(&q, row)| pinball(q, truth_future[j], row[j]))
                .sum()
        })
        .collect())
}

/// Squared point-forecast errors per future step.
pub fn squared_errors(truth_future: &[f64], point: &DVector<f64>) -> Result<Vec<f64>> {
    check_future(truth_future, point.len())?;
    Ok(truth_future
        .iter()
        .zip(point.iter())
        .map(|(x, p)| (x - p) * (x - p))
        .collect())
}

/// `√(mean of squared errors over scored steps)`, or `None` if no step is scored.
pub fn instance_rmse(sq_err: &[f64], t_prime: usize, mask: &StepMask) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in mask.scored_after(t_prime) {
        sum += sq_err[t - t_prime - 1];
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).sqrt())
}

fn future_of(profile: &[f64], t_prime: usize) -> &[f64] {
    &profile[t_prime..]
}

type Grouped<'a, T> = BTreeMap<usize, Vec<(usize, &'a T)>>;

fn group_by_t_prime<T>(per_instance: &[Vec<T>], t_prime_of: impl Fn(&T) -> usize) -> Result<Grouped<'_, T>> {
    let mut out: BTreeMap<usize, Vec<(usize, &T)>> = BTreeMap::new();
    for (n, items) in per_instance.iter().enumerate() {
        for item in items {
            out.entry(t_prime_of(item)).or_default().push((n, item));
        }
    }
    for rows in out.values() {
        if rows.len() != per_instance.len() {
            return Err(Error::ShapeMismatch(
                "every instance needs exactly one entry per update time".into(),
            ));
        }
    }
    Ok(out)
}

/// `AE(T′, t) = (1/(N S)) Σ_{n,s} |x_{t,n} − x̂_{t,n,s}|`.
///
/// `profiles[n]` is the full observed day of instance `n`; `ensembles[n]`
/// holds one ensemble per update time, all of the same size `S`.
pub fn ae_grid(profiles: &[Vec<f64>], ensembles: &[Vec<Ensemble>]) -> Result<WaterfallGrid> {
    if profiles.len() != ensembles.len() {
        return Err(Error::ShapeMismatch("one ensemble list per profile required".into()));
    }
    let mut grid = WaterfallGrid::new();
    for (t_prime, rows) in group_by_t_prime(ensembles, Ensemble::t_prime)? {
        let s = rows[0].1.size();
        if rows.iter().any(|(_, e)| e.size() != s) {
            return Err(Error::ShapeMismatch(format!(
                "ensembles at T'={t_prime} differ in size"
            )));
        }
        let per_instance: Vec<Vec<f64>> = rows
            .iter()
            .map(|(n, e)| mean_abs_errors(future_of(&profiles[*n], t_prime), e))
            .collect::<Result<_>>()?;
        for (t, value) in average_columns(&per_instance, t_prime) {
            grid.insert(t_prime, t, value)?;
        }
    }
    Ok(grid)
}

/// Averages per-instance step vectors (steps `T′+1..`) into `(t, mean)` pairs.
pub(crate) fn average_columns(per_instance: &[Vec<f64>], t_prime: usize) -> Vec<(usize, f64)> {
    let n = per_instance.len() as f64;
    let steps = per_instance.first().map_or(0, Vec::len);
    (0..steps)
        .map(|j| (t_prime + 1 + j, per_instance.iter().map(|v| v[j]).sum::<f64>() / n))
        .collect()
}

/// `MAE(T′)`: mean of `AE(T′, t)` over the scored steps after `T′`.
pub fn mae_trace(grid: &WaterfallGrid, mask: &StepMask, variant: Variant, dataset: DatasetTag) -> PerformanceTrace {
    let mut trace = PerformanceTrace::new("mae", variant, dataset);
    for t_prime in grid.t_primes() {
        let cells: Vec<f64> = mask
            .scored_after(t_prime)
            .filter_map(|t| grid.get(t_prime, t))
            .collect();
        if !cells.is_empty() {
            trace
                .values
                .insert(t_prime, cells.iter().sum::<f64>() / cells.len() as f64);
        }
    }
    trace
}

/// CRPS traces from quantile forecasts: the level-averaged score (`crps`)
/// and the raw level sum (`crps_raw`).
///
/// `ζ(T′, t) = (2/N) Σ_{n,i} pinball(q_i, x_{t,n}, y_{t,n,i})`, raw CRPS is
/// its mean over scored steps, and the normalized CRPS divides that by `Q`.
pub fn crps_traces(
    profiles: &[Vec<f64>],
    quantiles: &[Vec<QuantileSet>],
    mask: &StepMask,
    variant: Variant,
    dataset: DatasetTag,
) -> Result<(PerformanceTrace, PerformanceTrace)> {
    if profiles.len() != quantiles.len() {
        return Err(Error::ShapeMismatch("one quantile list per profile required".into()));
    }
    let mut raw = PerformanceTrace::new("crps_raw", variant, dataset);
    let mut norm = PerformanceTrace::new("crps", variant, dataset);
    for (t_prime, rows) in group_by_t_prime(quantiles, QuantileSet::t_prime)? {
        let levels = rows[0].1.levels();
        if rows.iter().any(|(_, q)| q.levels() != levels) {
            return Err(Error::ShapeMismatch("quantile levels differ between instances".into()));
        }
        let per_instance: Vec<Vec<f64>> = rows
            .iter()
            .map(|(n, q)| pinball_sums(future_of(&profiles[*n], t_prime), q))
            .collect::<Result<_>>()?;
        if let Some(value) = crps_from_pinball(&per_instance, t_prime, mask) {
            raw.values.insert(t_prime, value);
            norm.values.insert(t_prime, value / levels.len() as f64);
        }
    }
    Ok((norm, raw))
}

/// Raw CRPS at one update time from per-instance pinball sums.
pub(crate) fn crps_from_pinball(per_instance: &[Vec<f64>], t_prime: usize, mask: &StepMask) -> Option<f64> {
    let zeta: BTreeMap<usize, f64> = average_columns(per_instance, t_prime)
        .into_iter()
        .map(|(t, v)| (t, 2.0 * v))
        .collect();
    let scored: Vec<f64> = mask
        .scored_after(t_prime)
        .filter_map(|t| zeta.get(&t).copied())
        .collect();
    (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64)
}

/// `RMSE(T′) = (1/N) Σ_n √(mean_t (x_{t,n} − x̄_{t,n})²)`: the root is taken
/// per instance, then averaged.
///
/// `points[n]` holds `(T′, point forecast over T′+1..T)` pairs.
pub fn rmse_trace(
    profiles: &[Vec<f64>],
    points: &[Vec<(usize, DVector<f64>)>],
    mask: &StepMask,
    variant: Variant,
    dataset: DatasetTag,
) -> Result<PerformanceTrace> {
    if profiles.len() != points.len() {
        return Err(Error::ShapeMismatch(
            "one point-forecast list per profile required".into(),
        ));
    }
    let mut trace = PerformanceTrace::new("rmse", variant, dataset);
    for (t_prime, rows) in group_by_t_prime(points, |p| p.0)? {
        let roots: Vec<f64> = rows
            .iter()
            .map(|(n, (_, p))| {
                squared_errors(future_of(&profiles[*n], t_prime), p).map(|sq| instance_rmse(&sq, t_prime, mask))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if !roots.is_empty() {
            trace
                .values
                .insert(t_prime, roots.iter().sum::<f64>() / roots.len() as f64);
        }
    }
    Ok(trace)
}

/// Outcome of a likelihood evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NllTrace {
    pub trace: PerformanceTrace,
    /// `(instance index, T′)` pairs whose update failed and were left out.
    pub failures: Vec<(usize, usize)>,
}

/// `NLL(T′) = −(1/N) Σ_n ln p(x_n^{T′:} | x_n^{:T′})` for the updated
/// variant, or under the plain marginal over `T′+1..T` for the
/// non-updated one.
pub fn nll_trace(
    profiles: &[Vec<f64>],
    forecasts: &[MixtureForecast],
    t_primes: impl IntoIterator<Item = usize>,
    variant: Variant,
    dataset: DatasetTag,
) -> Result<NllTrace> {
    if profiles.len() != forecasts.len() {
        return Err(Error::ShapeMismatch("one forecast per profile required".into()));
    }
    let mut trace = PerformanceTrace::new("nll", variant, dataset);
    let mut failures = Vec::new();
    for t_prime in t_primes {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (n, (x, fc)) in profiles.iter().zip(forecasts).enumerate() {
            if x.len() != fc.horizon() {
                return Err(Error::ShapeMismatch(format!(
                    "profile {n} has {} steps, forecast horizon is {}",
                    x.len(),
                    fc.horizon()
                )));
            }
            match instance_log_density(x, fc, t_prime, variant) {
                Ok(ll) if ll.is_finite() => {
                    sum += ll;
                    count += 1;
                }
                Ok(_) | Err(Error::NotPositiveDefinite { .. } | Error::AllComponentsDegenerate) => {
                    failures.push((n, t_prime))
                }
                Err(e) => return Err(e),
            }
        }
        if count > 0 {
            trace.values.insert(t_prime, -sum / count as f64);
        }
    }
    Ok(NllTrace { trace, failures })
}

fn instance_log_density(x: &[f64], fc: &MixtureForecast, t_prime: usize, variant: Variant) -> Result<f64> {
    match variant {
        Variant::Updated => update(fc, &x[..t_prime])?.predictive_log_density(&x[t_prime..]),
        Variant::NonUpdated => fc.marginalize(t_prime..fc.horizon())?.log_density(&x[t_prime..]),
    }
}
