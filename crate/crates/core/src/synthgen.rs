//! A seeded generative process that stands in for a trained day-ahead
//! forecaster.
//!
//! A *component seed* plays the role of a latent draw: together with a
//! condition record it deterministically yields one multivariate normal
//! component with a smooth, daily-shaped mean. Ground-truth days are drawn
//! by picking a component seed and sampling from that component; a
//! `K`-component forecast is a uniform mixture over `K` independently drawn
//! component seeds.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceSpec, PatternDictionary};
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::mixture::{MixtureForecast, MvnComponent};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceStyle {
    Diagonal,
    Pdcc {
        /// Number of dictionary patterns `V`; defaults to the horizon.
        #[serde(default)]
        dictionary_size: Option<usize>,
        ridge: f64,
        /// Width of each pattern bump, in time steps.
        length_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolMode {
    /// Latent space is a fixed set of `size` component seeds `0..size`.
    Finite { size: u64 },
    /// Every component seed is a fresh 64-bit draw.
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub horizon: usize,
    /// Number of harmonics in the mean process.
    pub harmonics: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub base_level: f64,
    /// Typical per-step standard deviation.
    pub noise_scale: f64,
    pub covariance: CovarianceStyle,
    pub pool: PoolMode,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            horizon: 24,
            harmonics: 3,
            amplitude_min: 0.2,
            amplitude_max: 1.0,
            base_level: 1.0,
            noise_scale: 0.15,
            covariance: CovarianceStyle::Pdcc {
                dictionary_size: None,
                ridge: 1e-3,
                length_scale: 3.0,
            },
            pool: PoolMode::Finite { size: 64 },
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.horizon < 2 {
            return bad(format!("horizon must be at least 2, got {}", self.horizon));
        }
        if self.harmonics == 0 {
            return bad("at least one harmonic is required".into());
        }
        if !(self.amplitude_min > 0.0 && self.amplitude_max >= self.amplitude_min && self.amplitude_max.is_finite()) {
            return bad("amplitudes must satisfy 0 < min <= max".into());
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) || !self.base_level.is_finite() {
            return bad("noise_scale must be positive and base_level finite".into());
        }
        if let CovarianceStyle::Pdcc {
            dictionary_size,
            ridge,
            length_scale,
        } = &self.covariance
        {
            if dictionary_size.is_some_and(|v| v < self.horizon) {
                return bad("dictionary_size must be at least the horizon".into());
            }
            if !(*ridge > 0.0 && ridge.is_finite()) {
                return bad("ridge must be positive".into());
            }
            if !(*length_scale > 0.0 && length_scale.is_finite()) {
                return bad("length_scale must be positive".into());
            }
        }
        if let PoolMode::Finite { size: 0 } = self.pool {
            return bad("finite pool needs at least one component".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: GeneratorConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator config is always representable")
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// A ground-truth day together with the component seed that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct DayDraw {
    pub profile: Vec<f64>,
    pub component_seed: u64,
}

/// Frozen generative process.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    cfg: GeneratorConfig,
    dictionary: Option<Arc<PatternDictionary>>,
}

pub fn make_ground_truth(cfg: &GeneratorConfig) -> Result<GroundTruth> {
    GroundTruth::new(cfg.clone())
}

impl GroundTruth {
    pub fn new(cfg: GeneratorConfig) -> Result<Self> {
        cfg.validate()?;
        let dictionary = match &cfg.covariance {
            CovarianceStyle::Diagonal => None,
            CovarianceStyle::Pdcc {
                dictionary_size,
                ridge,
                length_scale,
            } => Some(Arc::new(build_dictionary(
                cfg.horizon,
                dictionary_size.unwrap_or(cfg.horizon),
                *length_scale,
                *ridge,
                cfg.seed,
            )?)),
        };
        Ok(Self { cfg, dictionary })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    pub fn dictionary(&self) -> Option<&Arc<PatternDictionary>> {
        self.dictionary.as_ref()
    }

    /// Draws one component seed from the latent distribution.
    pub fn draw_component_seed(&self, rng: &mut impl Rng) -> u64 {
        match self.cfg.pool {
            PoolMode::Finite { size } => rng.random_range(0..size),
            PoolMode::Infinite => rng.random(),
        }
    }

    /// Deterministic component for `(condition, component seed)`.
    pub fn component(&self, condition: &[f64], component_seed: u64) -> MvnComponent {
        let cfg = &self.cfg;
        let t_len = cfg.horizon;
        let mut rng = substream(cfg.seed, "component", component_seed);
        let shift = condition.first().copied().unwrap_or(0.0);
        let gain = (0.5 * condition.get(1).copied().unwrap_or(0.0)).exp();
        let offset = 0.3 * rng.sample::<f64, _>(StandardNormal);
        let harmonics: Vec<(f64, f64)> = (0..cfg.harmonics)
            .map(|_| {
                (
                    rng.random_range(cfg.amplitude_min..=cfg.amplitude_max),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        let mean: Vec<f64> = (0..t_len)
            .map(|t| {
                let x = (t as f64 + 0.5) / t_len as f64;
                let wave: f64 = harmonics
                    .iter()
                    .enumerate()
                    .map(|(j, (a, phi))| {
                        let order = (j + 1) as f64;
                        a / order * (TAU * order * x + phi + shift).sin()
                    })
                    .sum();
                cfg.base_level + offset + gain * wave
            })
            .collect();
        let scale = cfg.noise_scale * rng.random_range(0.5..1.5);
        let cov = match &self.dictionary {
            None => {
                let psi = rng.random_range(0.0..TAU);
                let sigma = (0..t_len)
                    .map(|t| scale * (0.75 + 0.25 * (PI * 2.0 * t as f64 / t_len as f64 + psi).sin()))
                    .collect();
                CovarianceSpec::Diagonal { sigma }
            }
            Some(dict) => {
                let aux_sigma = (0..dict.size()).map(|_| scale * rng.random_range(0.3..1.0)).collect();
                CovarianceSpec::Pdcc {
                    dictionary: Arc::clone(dict),
                    aux_sigma,
                }
            }
        };
        MvnComponent::new(mean, cov).expect("generator emits valid components")
    }

    /// `K`-component uniform mixture over freshly drawn component seeds.
    pub fn approximate_forecast(&self, condition: &[f64], k: usize, seed: u64) -> Result<MixtureForecast> {
        if k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        let seeds = self.forecast_component_seeds(k, seed);
        let components = seeds.iter().map(|&s| self.component(condition, s)).collect();
        Ok(MixtureForecast::uniform(format!("fc-{seed}"), components)?.with_condition(condition.to_vec()))
    }

    /// The component seeds `approximate_forecast` uses for `(k, seed)`; the
    /// seeds for a smaller `k` are a prefix of those for a larger one.
    pub fn forecast_component_seeds(&self, k: usize, seed: u64) -> Vec<u64> {
        let mut rng = substream(seed, "approximate", 0);
        (0..k).map(|_| self.draw_component_seed(&mut rng)).collect()
    }

    /// Uniform mixture over the whole finite pool, i.e. the exact
    /// distribution of `draw_day`. `None` in infinite mode.
    pub fn exact_forecast(&self, condition: &[f64]) -> Option<MixtureForecast> {
        match self.cfg.pool {
            PoolMode::Finite { size } => {
                let components = (0..size).map(|s| self.component(condition, s)).collect();
                Some(
                    MixtureForecast::uniform("pool", components)
                        .expect("pool is non-empty")
                        .with_condition(condition.to_vec()),
                )
            }
            PoolMode::Infinite => None,
        }
    }

    /// One ground-truth day for `condition`.
    pub fn draw_day(&self, condition: &[f64], seed: u64) -> DayDraw {
        let mut rng = substream(seed, "day", 0);
        let component_seed = self.draw_component_seed(&mut rng);
        let comp = self.component(condition, component_seed);
        let factor = CholeskyFactor::new(&comp.cov().materialize(), "generator covariance")
            .expect("generator covariances are positive definite");
        let z: Vec<f64> = (0..self.horizon()).map(|_| rng.sample(StandardNormal)).collect();
        let profile: DVector<f64> = comp.mean() + factor.colour(&z);
        DayDraw {
            profile: profile.iter().copied().collect(),
            component_seed,
        }
    }

    /// `n` condition records `[phase shift, log-gain]`, cycling through a
    /// weekly phase with a random gain.
    pub fn conditions(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = substream(seed, "conditions", 0);
        (0..n)
            .map(|i| {
                let phase = 0.25 * TAU * (i % 7) as f64 / 7.0;
                let gain = 0.3 * rng.sample::<f64, _>(StandardNormal);
                vec![phase, gain]
            })
            .collect()
    }
}

/// Smooth bump patterns, rows normalized to unit energy.
fn build_dictionary(t_len: usize, v: usize, length_scale: f64, ridge: f64, seed: u64) -> Result<PatternDictionary> {
    let mut rng = substream(seed, "dictionary", 0);
    let mut u = DMatrix::zeros(t_len, v);
    for j in 0..v {
        let center = (j as f64 + rng.random_range(0.0..1.0)) * t_len as f64 / v as f64;
        let width = length_scale * rng.random_range(0.5..1.5);
        let sign = if rng.random_bool(0.8) { 1.0 } else { -1.0 };
        for t in 0..t_len {
            let d = (t as f64 + 0.5 - center) / width;
            u[(t, j)] = sign * (-0.5 * d * d).exp();
        }
    }
    for mut row in u.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    PatternDictionary::new("synthgen", u, ridge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(covariance: CovarianceStyle) -> GeneratorConfig {
        GeneratorConfig {
            horizon: 8,
            covariance,
            seed: 5,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn same_config_same_behaviour() {
        let a = GroundTruth::new(cfg(GeneratorConfig::default().covariance)).unwrap();
        let b = GroundTruth::new(cfg(GeneratorConfig::default().covariance)).unwrap();
        assert_eq!(a.component(&[0.1, 0.0], 3), b.component(&[0.1, 0.0], 3));
        assert_eq!(a.draw_day(&[0.0, 0.2], 9), b.draw_day(&[0.0, 0.2], 9));
        assert_eq!(
            a.approximate_forecast(&[0.0, 0.0], 4, 1).unwrap(),
            b.approximate_forecast(&[0.0, 0.0], 4, 1).unwrap()
        );
    }

    #[test]
    fn pdcc_components_share_dictionary() {
        let gt = GroundTruth::new(cfg(GeneratorConfig::default().covariance)).unwrap();
        let fc = gt.approximate_forecast(&[0.0, 0.0], 5, 2).unwrap();
        let d0 = fc.components()[0].cov().dictionary().unwrap();
        assert!(fc
            .components()
            .iter()
            .all(|c| Arc::ptr_eq(c.cov().dictionary().unwrap(), d0)));
        assert!(Arc::ptr_eq(d0, gt.dictionary().unwrap()));
    }

    #[test]
    fn diagonal_style_has_no_cross_covariance() {
        let gt = GroundTruth::new(cfg(CovarianceStyle::Diagonal)).unwrap();
        let m = gt.component(&[0.0, 0.0], 1).cov().materialize();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn k_one_and_distinct_components() {
        let gt = GroundTruth::new(GeneratorConfig {
            pool: PoolMode::Infinite,
            ..cfg(CovarianceStyle::Diagonal)
        })
        .unwrap();
        assert_eq!(gt.approximate_forecast(&[0.0], 1, 3).unwrap().k(), 1);
        let fc = gt.approximate_forecast(&[0.0], 3, 3).unwrap();
        assert_ne!(fc.components()[0], fc.components()[1]);
        assert!(gt.approximate_forecast(&[0.0], 0, 3).is_err());
    }

    #[test]
    fn draws_are_finite_and_full_length() {
        let gt = GroundTruth::new(cfg(GeneratorConfig::default().covariance)).unwrap();
        for s in 0..20 {
            let d = gt.draw_day(&[0.3, -0.1], s);
            assert_eq!(d.profile.len(), 8);
            assert!(d.profile.iter().all(|v| v.is_finite()));
            assert!(d.component_seed < 64);
        }
    }

    #[test]
    fn config_validation() {
        let c = GeneratorConfig {
            horizon: 1,
            ..GeneratorConfig::default()
        };
        assert!(c.validate().is_err());
        let c = GeneratorConfig {
            covariance: CovarianceStyle::Pdcc {
                dictionary_size: Some(4),
                ridge: 1e-3,
                length_scale: 2.0,
            },
            ..GeneratorConfig::default()
        };
        assert!(matches!(GroundTruth::new(c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn toml_round_trip_and_errors() {
        let c = GeneratorConfig::default();
        assert_eq!(GeneratorConfig::from_toml(&c.to_toml()).unwrap(), c);
        let err = GeneratorConfig::from_toml("horizon = 4\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
