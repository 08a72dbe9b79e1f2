//! Bayesian intraday updating of a mixture forecast on an observed prefix.
//!
//! Observing the first `T′` steps reweights each component by how well it
//! explains the prefix (posterior weights) and replaces it by its Gaussian
//! conditional over the remaining `T − T′` steps. The result is again a
//! Gaussian mixture, so the update can be chained.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::covariance::CovarianceSpec;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, CholeskyFactor};
use crate::mixture::{log_sum_exp, MixtureForecast, MvnComponent};

/// Mixture weights after observing the first `t_prime` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorWeights {
    gamma: Vec<f64>,
    t_prime: usize,
}

impl PosteriorWeights {
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn t_prime(&self) -> usize {
        self.t_prime
    }

    /// Index of the heaviest component (first on ties).
    pub fn argmax(&self) -> usize {
        self.gamma
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, &g)| if g > best.1 { (i, g) } else { best },
            )
            .0
    }
}

/// Gaussian conditional of one component over the remaining horizon, with
/// the Cholesky factor of its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedComponent {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    factor: CholeskyFactor,
}

impl ConditionedComponent {
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        self.factor.gaussian_log_density(&(x - &self.mean))
    }
}

/// Conditions `comp` on its first `obs.len()` coordinates.
///
/// mean = μ₂ + Σ₂₁ Σ₁₁⁻¹ (obs − μ₁), cov = Σ₂₂ − Σ₂₁ Σ₁₁⁻¹ Σ₁₂, with Σ₁₁⁻¹
/// applied through triangular solves against its Cholesky factor. An empty
/// observation vector yields the plain marginal.
pub fn condition_component(comp: &MvnComponent, obs: &[f64]) -> Result<ConditionedComponent> {
    let horizon = comp.dim();
    let observed = obs.len();
    if observed >= horizon {
        return Err(Error::InvalidUpdateTime {
            t_prime: observed,
            horizon,
        });
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("observations"));
    }
    let remaining = horizon - observed;
    let full = comp.cov().materialize();
    let mu = comp.mean();
    let (mean, cov) = if observed == 0 {
        (mu.clone(), full)
    } else {
        let s11 = full.view((0, 0), (observed, observed)).into_owned();
        let s21 = full.view((observed, 0), (remaining, observed));
        let s22 = full.view((observed, observed), (remaining, remaining));
        let f11 = CholeskyFactor::new(&s11, "observed block")?;
        // A = L⁻¹ Σ₁₂, so Σ₂₁ Σ₁₁⁻¹ Σ₁₂ = AᵀA.
        let a = f11.solve_lower_mat(&s21.transpose());
        let resid = DVector::from_column_slice(obs) - mu.rows(0, observed);
        let w = f11.solve_lower(&resid);
        let mean = mu.rows(observed, remaining) + a.tr_mul(&w);
        let mut cov = s22 - a.tr_mul(&a);
        symmetrize(&mut cov);
        (mean, cov)
    };
    let factor = CholeskyFactor::new(&cov, "conditioned covariance")?;
    Ok(ConditionedComponent { mean, cov, factor })
}

/// Posterior component weights `∝ w_k N(obs; μ_k¹, Σ_k¹¹)` for arbitrary
/// non-negative prior weights (they need not be normalized).
///
/// Components whose observed block cannot be factorized get zero weight.
pub fn responsibilities(components: &[MvnComponent], prior: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
    if components.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            context: "prior weights vs components",
            expected: components.len(),
            found: prior.len(),
        });
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("observations"));
    }
    let observed = obs.len();
    let log_terms: Vec<f64> = components
        .iter()
        .zip(prior)
        .map(|(c, &w)| {
            if observed > c.dim() {
                return Err(Error::InvalidUpdateTime {
                    t_prime: observed,
                    horizon: c.dim(),
                });
            }
            if w <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            if observed == 0 {
                return Ok(w.ln());
            }
            Ok(match c.marginal(0..observed).log_density(obs) {
                Ok(ll) if !ll.is_nan() => w.ln() + ll,
                _ => f64::NEG_INFINITY,
            })
        })
        .collect::<Result<_>>()?;
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllComponentsDegenerate);
    }
    let shifted: Vec<f64> = log_terms.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.into_iter().map(|e| e / total).collect())
}

/// Posterior weights of `fc` after observing `obs` (the first `T′` steps).
pub fn posterior_weights(fc: &MixtureForecast, obs: &[f64]) -> Result<PosteriorWeights> {
    let t_prime = obs.len();
    if t_prime > fc.horizon() {
        return Err(Error::InvalidUpdateTime {
            t_prime,
            horizon: fc.horizon(),
        });
    }
    let gamma = if t_prime == 0 {
        fc.weights().to_vec()
    } else {
        responsibilities(fc.components(), fc.weights(), obs)?
    };
    Ok(PosteriorWeights { gamma, t_prime })
}

/// Updates `fc` on the observed prefix `obs`. Component conditionals are
/// computed on first use and cached.
pub fn update<'a>(fc: &'a MixtureForecast, obs: &[f64]) -> Result<IntradayUpdate<'a>> {
    IntradayUpdate::new(fc, obs)
}

/// Intraday forecast over steps `T′+1..T`: posterior weights plus lazily
/// conditioned components.
#[derive(Debug)]
pub struct IntradayUpdate<'a> {
    source: &'a MixtureForecast,
    observations: Vec<f64>,
    gamma: PosteriorWeights,
    conditioned: Vec<OnceLock<Arc<ConditionedComponent>>>,
    caching: bool,
}

impl<'a> IntradayUpdate<'a> {
    pub fn new(fc: &'a MixtureForecast, obs: &[f64]) -> Result<Self> {
        if obs.len() >= fc.horizon() {
            return Err(Error::InvalidUpdateTime {
                t_prime: obs.len(),
                horizon: fc.horizon(),
            });
        }
        let gamma = posterior_weights(fc, obs)?;
        Ok(Self {
            source: fc,
            observations: obs.to_vec(),
            gamma,
            conditioned: (0..fc.k()).map(|_| OnceLock::new()).collect(),
            caching: true,
        })
    }

    /// Disables the conditional cache: every access recomputes.
    pub fn without_cache(mut self) -> Self {
        self.caching = false;
        self
    }

    pub fn caching(&self) -> bool {
        self.caching
    }

    pub fn source(&self) -> &'a MixtureForecast {
        self.source
    }

    pub fn t_prime(&self) -> usize {
        self.observations.len()
    }

    /// Number of steps still to be forecast, `T − T′`.
    pub fn remaining(&self) -> usize {
        self.source.horizon() - self.t_prime()
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn weights(&self) -> &PosteriorWeights {
        &self.gamma
    }

    pub fn gamma(&self) -> &[f64] {
        self.gamma.gamma()
    }

    /// Whether the conditional of component `k` is already cached.
    pub fn is_cached(&self, k: usize) -> bool {
        self.conditioned[k].get().is_some()
    }

    /// Conditional of component `k`, computed once and then reused.
    pub fn conditioned(&self, k: usize) -> Result<Arc<ConditionedComponent>> {
        let slot = &self.conditioned[k];
        if let Some(hit) = slot.get() {
            return Ok(Arc::clone(hit));
        }
        let fresh = Arc::new(condition_component(&self.source.components()[k], &self.observations)?);
        if !self.caching {
            return Ok(fresh);
        }
        // Racing writers install identical values; the first one wins.
        Ok(Arc::clone(slot.get_or_init(|| fresh)))
    }

    fn check_future(&self, x_future: &[f64]) -> Result<()> {
        if x_future.len() != self.remaining() {
            return Err(Error::DimensionMismatch {
                context: "future values",
                expected: self.remaining(),
                found: x_future.len(),
            });
        }
        if x_future.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("future values"));
        }
        Ok(())
    }

    /// `ln Σ_k γ_k N(x_future; μ_k|, Σ_k|)`.
    pub fn predictive_log_density(&self, x_future: &[f64]) -> Result<f64> {
        self.check_future(x_future)?;
        let x = DVector::from_column_slice(x_future);
        let mut terms = Vec::with_capacity(self.gamma().len());
        for (k, &g) in self.gamma().iter().enumerate() {
            if g > 0.0 {
                terms.push(g.ln() + self.conditioned(k)?.log_density(&x));
            }
        }
        Ok(log_sum_exp(&terms))
    }

    /// Point forecast `Σ_k γ_k μ_k|`.
    pub fn mixture_mean(&self) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.remaining());
        for (k, &g) in self.gamma().iter().enumerate() {
            if g > 0.0 {
                out.axpy(g, self.conditioned(k)?.mean(), 1.0);
            }
        }
        Ok(out)
    }

    /// The updated distribution as a standalone mixture over the remaining
    /// horizon with dense components and weights γ, which can itself be
    /// updated further. Components with zero posterior weight are dropped.
    pub fn to_forecast(&self) -> Result<MixtureForecast> {
        let mut components = Vec::new();
        let mut weights = Vec::new();
        for (k, &g) in self.gamma().iter().enumerate() {
            if g > 0.0 {
                let c = self.conditioned(k)?;
                components.push(MvnComponent::new_unchecked(
                    c.mean().clone(),
                    CovarianceSpec::Dense {
                        matrix: c.cov().clone(),
                    },
                ));
                weights.push(g);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(MixtureForecast::new(self.source.id(), components, weights)?
            .with_condition(self.source.condition().to_vec()))
    }
}
