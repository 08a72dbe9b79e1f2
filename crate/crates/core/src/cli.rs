//! Command-line front end: `gen`, `update`, `sample`, `evaluate`, `tune-k`.
//!
//! Data goes to files or standard output; progress and diagnostics go to
//! standard error. Exit codes: 0 success, 1 invalid input or flags,
//! 2 numerical failure, 3 I/O or file-format failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, ErrorClass, Result};
use crate::evaluate::{evaluate, EvalConfig};
use crate::io::{self, Profile};
use crate::metrics::{default_levels, DatasetTag};
use crate::mixture::MixtureForecast;
use crate::rng::derive_seed;
use crate::sampler::sample_ensemble;
use crate::synthgen::{CovarianceStyle, GeneratorConfig, GroundTruth, PoolMode};
use crate::tuning::{
    build_best_case_set, build_forecasts, build_synthetic_set, select_k, TuningSeeds, DEFAULT_K_GRID,
    DEFAULT_TUNING_INSTANCES,
};
use crate::update::update;

#[derive(Debug, Parser)]
#[command(
    name = "gmm-intraday",
    version,
    about = "Update Gaussian-mixture day-ahead forecasts on intraday observations",
    long_about = "Update Gaussian-mixture day-ahead forecasts on intraday observations.\n\n\
        Formats:\n  \
        model.json     {format_version: 1, horizon, dictionary?: {id, ridge, matrix}, instances: [{id, condition, k, components: [{mean, cov}], weights?}]}\n                 \
        cov is {kind: diag, sigma} | {kind: pdcc, dictionary, aux_sigma} | {kind: dense, matrix}\n  \
        profiles.csv   instance_id,t1..tT\n  \
        conditions.csv instance_id,c1..cC\n  \
        traces.csv     dataset_tag,variant,metric,t_prime,value\n  \
        grid.csv       variant,t_prime,t,value"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a model file and a test set from the synthetic process.
    Gen(GenArgs),
    /// Update forecasts on the first T' observed steps and print weights and moments as JSON.
    Update(UpdateArgs),
    /// Sample ensembles from updated forecasts.
    Sample(SampleArgs),
    /// Score updated and non-updated forecasts for every update time.
    Evaluate(EvaluateArgs),
    /// Choose the number of mixture components K.
    TuneK(TuneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Real,
    Synthetic,
    BestCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CovarianceKind {
    Diag,
    Pdcc,
}

/// Generator settings shared by `gen` and `tune-k`. Flags override the
/// config file.
#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// Generator config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Horizon T.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Finite latent pool size; 0 selects the infinite pool.
    #[arg(long)]
    pub pool_size: Option<u64>,
    #[arg(long, value_enum)]
    pub covariance: Option<CovarianceKind>,
}

impl GeneratorArgs {
    fn resolve(&self, seed: u64) -> Result<GeneratorConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                GeneratorConfig::from_toml(&text)?
            }
            None => GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            },
        };
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        match self.pool_size {
            Some(0) => cfg.pool = PoolMode::Infinite,
            Some(m) => cfg.pool = PoolMode::Finite { size: m },
            None => {}
        }
        match self.covariance {
            Some(CovarianceKind::Diag) => cfg.covariance = CovarianceStyle::Diagonal,
            Some(CovarianceKind::Pdcc) if matches!(cfg.covariance, CovarianceStyle::Diagonal) => {
                cfg.covariance = GeneratorConfig::default().covariance
            }
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Number of instances N.
    #[arg(long, default_value_t = 16)]
    pub instances: usize,
    /// Mixture components K per forecast.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Which test set to emit alongside the model.
    #[arg(long, value_enum, default_value_t = Kind::Real)]
    pub kind: Kind,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Observed profiles (CSV).
    #[arg(long)]
    pub data: PathBuf,
    /// Restrict to one instance id.
    #[arg(long)]
    pub instance: Option<String>,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of observed steps T'.
    #[arg(long)]
    pub t_prime: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub t_prime: usize,
    /// Ensemble size S; defaults to each forecast's K.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute component conditionals for every trace.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub seed: u64,
    /// Trace table output (CSV).
    #[arg(long)]
    pub traces: PathBuf,
    /// Waterfall grid output (CSV).
    #[arg(long)]
    pub grid: PathBuf,
    /// Ensemble size S; defaults to each forecast's K.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Quantile levels, comma separated [default: 0.05,0.10,...,0.95].
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    /// Update times: `a..b`, `a..=b`, `a,b,c` or a single value [default: 0..T].
    #[arg(long)]
    pub t_prime: Option<String>,
    /// Exclude this many trailing steps from step averages (28 for PV days).
    #[arg(long, default_value_t = 0)]
    pub mask_window: usize,
    #[arg(long, value_enum, default_value_t = Kind::Real)]
    pub dataset_tag: Kind,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub seed: u64,
    /// Report output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Candidate K values, comma separated [default: 2,5,10,25,50,100].
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_TUNING_INSTANCES)]
    pub instances: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation => 1,
        ErrorClass::Numerical => 2,
        ErrorClass::Io => 3,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Update(a) => cmd_update(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::TuneK(a) => cmd_tune_k(&a),
    }
}

fn dataset_tag(kind: Kind) -> DatasetTag {
    match kind {
        Kind::Real => DatasetTag::Real,
        Kind::Synthetic => DatasetTag::Synthetic,
        Kind::BestCase => DatasetTag::BestCase,
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    if a.instances == 0 || a.k == 0 {
        return Err(Error::InvalidConfig("--instances and --k must be positive".into()));
    }
    let cfg = a.generator.resolve(a.seed)?;
    let gt = GroundTruth::new(cfg.clone())?;
    let conditions = gt.conditions(a.instances, derive_seed(a.seed, "gen-conditions", 0));
    let forecasts = build_forecasts(&gt, &conditions, a.k, derive_seed(a.seed, "gen-forecast", 0))?;

    let set = match a.kind {
        Kind::Real => {
            let mut s = build_synthetic_set(&gt, &conditions, derive_seed(a.seed, "gen-real", 0));
            s.kind = DatasetTag::Real;
            s
        }
        Kind::Synthetic => build_synthetic_set(&gt, &conditions, derive_seed(a.seed, "gen-synthetic", 0)),
        Kind::BestCase => build_best_case_set(&forecasts, derive_seed(a.seed, "gen-best-case", 0))?,
    };

    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    io::write_model(&forecasts, a.out_dir.join("model.json"))?;
    let profiles: Vec<Profile> = set
        .instances
        .iter()
        .map(|i| Profile {
            id: i.id.clone(),
            values: i.profile.clone(),
        })
        .collect();
    io::write_profiles(&profiles, a.out_dir.join("profiles.csv"))?;
    let conds: BTreeMap<String, Vec<f64>> = set
        .instances
        .iter()
        .map(|i| (i.id.clone(), i.condition.clone()))
        .collect();
    io::write_conditions(&conds, a.out_dir.join("conditions.csv"))?;
    let generators: Vec<(String, u64)> = set
        .instances
        .iter()
        .filter_map(|i| i.generator.map(|g| (i.id.clone(), g)))
        .collect();
    io::write_generators(&generators, a.out_dir.join("generators.csv"))?;
    let path = a.out_dir.join("generator.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(&path, e))?;
    eprintln!(
        "wrote {} {} instances (T={}, K={}) to {}",
        a.instances,
        dataset_tag(a.kind),
        cfg.horizon,
        a.k,
        a.out_dir.display()
    );
    Ok(())
}

/// Loads forecasts and matches each to its profile by instance id.
fn load_pairs(d: &DataArgs) -> Result<(Vec<MixtureForecast>, Vec<Vec<f64>>)> {
    let mut forecasts = io::read_model(&d.model)?;
    let profiles: BTreeMap<String, Vec<f64>> = io::read_profiles(&d.data)?
        .into_iter()
        .map(|p| (p.id, p.values))
        .collect();
    if let Some(id) = &d.instance {
        forecasts.retain(|f| f.id() == id);
        if forecasts.is_empty() {
            return Err(Error::UnknownInstance(id.clone()));
        }
    }
    let mut xs = Vec::with_capacity(forecasts.len());
    for fc in &forecasts {
        let x = profiles
            .get(fc.id())
            .ok_or_else(|| Error::UnknownInstance(fc.id().to_string()))?;
        if x.len() != fc.horizon() {
            return Err(Error::ShapeMismatch(format!(
                "profile '{}' has {} steps, model horizon is {}",
                fc.id(),
                x.len(),
                fc.horizon()
            )));
        }
        xs.push(x.clone());
    }
    Ok((forecasts, xs))
}

fn check_t_prime(t_prime: usize, horizon: usize) -> Result<()> {
    if t_prime >= horizon {
        return Err(Error::InvalidConfig(format!(
            "T'={t_prime} leaves nothing to forecast (horizon {horizon}); use T' <= {}",
            horizon - 1
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ConditionedSummary {
    index: usize,
    weight: f64,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct UpdateSummary {
    instance_id: String,
    t_prime: usize,
    prior_weights: Vec<f64>,
    gamma: Vec<f64>,
    mixture_mean: Vec<f64>,
    /// Components with non-zero posterior weight.
    components: Vec<ConditionedSummary>,
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::io(p, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

pub fn cmd_update(a: &UpdateArgs) -> Result<()> {
    let (forecasts, xs) = load_pairs(&a.data)?;
    let mut out = Vec::with_capacity(forecasts.len());
    for (fc, x) in forecasts.iter().zip(&xs) {
        check_t_prime(a.t_prime, fc.horizon())?;
        let upd = update(fc, &x[..a.t_prime])?;
        let mut components = Vec::new();
        for (k, &g) in upd.gamma().iter().enumerate() {
            if g > 0.0 {
                let c = upd.conditioned(k)?;
                components.push(ConditionedSummary {
                    index: k,
                    weight: g,
                    mean: c.mean().iter().copied().collect(),
                    cov: c.cov().row_iter().map(|r| r.iter().copied().collect()).collect(),
                });
            }
        }
        out.push(UpdateSummary {
            instance_id: fc.id().to_string(),
            t_prime: a.t_prime,
            prior_weights: fc.weights().to_vec(),
            gamma: upd.gamma().to_vec(),
            mixture_mean: upd.mixture_mean()?.iter().copied().collect(),
            components,
        });
    }
    let mut text = serde_json::to_string_pretty(&out).expect("summary serializes");
    text.push('\n');
    write_output(a.out.as_deref(), text.as_bytes())
}

pub fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let (forecasts, xs) = load_pairs(&a.data)?;
    let mut ensembles = Vec::with_capacity(forecasts.len());
    for (fc, x) in forecasts.iter().zip(&xs) {
        check_t_prime(a.t_prime, fc.horizon())?;
        let mut upd = update(fc, &x[..a.t_prime])?;
        if a.no_cache {
            upd = upd.without_cache();
        }
        ensembles.push(sample_ensemble(&upd, a.samples.unwrap_or(fc.k()), a.seed)?);
    }
    let mut buf = Vec::new();
    io::write_ensembles_to(&ensembles, &mut buf)?;
    write_output(a.out.as_deref(), &buf)
}

/// Parses `a..b`, `a..=b`, `a,b,c` or `a`.
pub fn parse_t_primes(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidConfig(format!("cannot parse update times '{spec}'"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = spec.split_once("..=") {
        Ok((num(a)?..=num(b)?).collect())
    } else if let Some((a, b)) = spec.split_once("..") {
        Ok((num(a)?..num(b)?).collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let (forecasts, xs) = load_pairs(&a.data)?;
    let mut cfg = EvalConfig::new(a.seed);
    cfg.t_primes = a.t_prime.as_deref().map(parse_t_primes).transpose()?;
    cfg.levels = a.levels.clone().unwrap_or_else(default_levels);
    cfg.ensemble_size = a.samples;
    cfg.mask_window = a.mask_window;
    cfg.dataset = dataset_tag(a.dataset_tag);
    cfg.caching = !a.no_cache;
    cfg.threads = a.threads;
    let report = evaluate(&xs, &forecasts, &cfg)?;
    io::write_traces(&report.traces, &a.traces)?;
    io::write_grid(&report.grids, &a.grid)?;
    eprintln!(
        "evaluated {} instances; {} (instance, T') pairs excluded after numerical failures",
        report.instances,
        report.failures.len()
    );
    for (id, tp) in &report.failures {
        eprintln!("  excluded {id} at T'={tp}");
    }
    Ok(())
}

pub fn cmd_tune_k(a: &TuneArgs) -> Result<()> {
    if a.instances == 0 {
        return Err(Error::InvalidConfig("--instances must be positive".into()));
    }
    let cfg = a.generator.resolve(a.seed)?;
    let gt = GroundTruth::new(cfg)?;
    let conditions = gt.conditions(a.instances, derive_seed(a.seed, "tune-conditions", 0));
    let grid = a.k_grid.clone().unwrap_or_else(|| DEFAULT_K_GRID.to_vec());
    let report = select_k(&grid, &gt, &conditions, TuningSeeds::from_master(a.seed), a.threads)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    std::fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))?;
    for (k, g) in &report.gap {
        eprintln!("K={k:>4}  gap={g:.6}");
    }
    eprintln!("selected K*={}", report.k_star);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_prime_specs() {
        assert_eq!(parse_t_primes("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_t_primes("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_t_primes("4, 7").unwrap(), vec![4, 7]);
        assert_eq!(parse_t_primes("5").unwrap(), vec![5]);
        assert!(parse_t_primes("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
