//! Bayesian intraday updating of Gaussian-mixture day-ahead forecasts.
//!
//! A day-ahead forecast is a `K`-component mixture of multivariate normals
//! over the `T` steps of a day. Once the first `T′` steps have been
//! measured, [`update()`] turns it into an exact mixture over the remaining
//! steps: component weights become posterior responsibilities and each
//! component is replaced by its Gaussian conditional. From there the crate
//! samples ensembles, extracts quantiles and point forecasts, and scores
//! them against held-out data.
//!
//! ```
//! use gmm_intraday::{CovarianceSpec, MixtureForecast, MvnComponent, update};
//! use nalgebra::DMatrix;
//!
//! let cov = CovarianceSpec::dense(DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0])).unwrap();
//! let fc = MixtureForecast::uniform("day-1", vec![MvnComponent::new(vec![1.0, 2.0], cov).unwrap()]).unwrap();
//! let upd = update(&fc, &[3.0]).unwrap();
//! assert!((upd.mixture_mean().unwrap()[0] - 3.0).abs() < 1e-12);
//! ```
//!
//! ## Examples
//!
//! - `condition_update`: posterior weights and conditional means step by step
//! - `sample_ensemble`: intraday scenario ensembles and quantile bands
//! - `evaluate_waterfall`: updated vs non-updated scores, traces and the AE grid
//! - `pv_mask`: scoring a 96-step day with the evening steps masked
//! - `tune_k`: choosing the number of components
//! - `model_files`: JSON model and CSV profile round trips
//! - `synthetic_data`: generator config, best-case and synthetic test sets
//!
//! ```bash
//! cargo run --release --example evaluate_waterfall
//! ```

pub mod cli;
pub mod covariance;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod mixture;
pub mod rng;
pub mod sampler;
pub mod synthgen;
pub mod tuning;
pub mod update;

pub use covariance::{CovarianceSpec, PatternDictionary};
pub use error::{Error, ErrorClass, Result};
pub use mixture::{MixtureForecast, MvnComponent};
pub use sampler::{sample_day_ahead, sample_ensemble, Ensemble};
pub use update::{
    condition_component, posterior_weights, update, ConditionedComponent, IntradayUpdate, PosteriorWeights,
};
