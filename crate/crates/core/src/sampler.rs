//! Hierarchical ensemble sampling: pick a component from the posterior
//! weights, then draw from its (cached) Gaussian conditional.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mixture::MixtureForecast;
use crate::rng::substream;
use crate::update::{update, IntradayUpdate};

/// `S` equiprobable trajectories over steps `T′+1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    source_id: String,
    t_prime: usize,
    seed: u64,
    trajectories: DMatrix<f64>,
    components: Vec<usize>,
}

impl Ensemble {
    pub fn new(source_id: impl Into<String>, t_prime: usize, seed: u64, trajectories: DMatrix<f64>) -> Result<Self> {
        if trajectories.nrows() == 0 {
            return Err(Error::InvalidSampleCount);
        }
        if trajectories.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("ensemble"));
        }
        Ok(Self {
            source_id: source_id.into(),
            t_prime,
            seed,
            trajectories,
            components: Vec::new(),
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `S × (T − T′)`, one trajectory per row.
    pub fn trajectories(&self) -> &DMatrix<f64> {
        &self.trajectories
    }

    pub fn size(&self) -> usize {
        self.trajectories.nrows()
    }

    pub fn steps(&self) -> usize {
        self.trajectories.ncols()
    }

    /// Component each trajectory was drawn from (empty when not sampled here).
    pub fn components(&self) -> &[usize] {
        &self.components
    }
}

/// Draws `s` trajectories from an intraday update.
///
/// Trace `i` uses its own random stream keyed by `(seed, forecast id, i)`:
/// one uniform for the component choice, then `T − T′` standard normals.
/// Conditioning never consumes randomness, so cached and uncached updates
/// give bit-identical ensembles.
pub fn sample_ensemble(upd: &IntradayUpdate<'_>, s: usize, seed: u64) -> Result<Ensemble> {
    if s == 0 {
        return Err(Error::InvalidSampleCount);
    }
    let picker = WeightedIndex::new(upd.gamma()).map_err(|e| Error::InvalidWeights(e.to_string()))?;
    let id = upd.source().id();
    let steps = upd.remaining();
    let mut trajectories = DMatrix::zeros(s, steps);
    let mut components = Vec::with_capacity(s);
    let mut z = vec![0.0; steps];
    for trace in 0..s {
        let mut rng = substream(seed, id, trace as u64);
        let k = picker.sample(&mut rng);
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let cond = upd.conditioned(k)?;
        let draw = cond.mean() + cond.factor().colour(&z);
        trajectories.row_mut(trace).tr_copy_from(&draw);
        components.push(k);
    }
    Ok(Ensemble {
        source_id: id.to_string(),
        t_prime: upd.t_prime(),
        seed,
        trajectories,
        components,
    })
}

/// Draws `s` full-horizon trajectories from the day-ahead mixture.
pub fn sample_day_ahead(fc: &MixtureForecast, s: usize, seed: u64) -> Result<Ensemble> {
    sample_ensemble(&update(fc, &[])?, s, seed)
}
