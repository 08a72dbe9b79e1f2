//! Gaussian mixture forecasts over a daily horizon.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::covariance::{CovarianceSpec, PatternDictionary};
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

/// Tolerance on `Σ weights = 1`.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// One multivariate normal component.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnComponent {
    mean: DVector<f64>,
    cov: CovarianceSpec,
}

impl MvnComponent {
    pub fn new(mean: impl Into<DVector<f64>>, cov: CovarianceSpec) -> Result<Self> {
        let mean = mean.into();
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("component mean"));
        }
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                context: "component mean vs covariance",
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        cov.validate()?;
        Ok(Self { mean, cov })
    }

    /// Builds a component without re-validating the covariance. Used for
    /// blocks derived from an already validated component.
    pub(crate) fn new_unchecked(mean: DVector<f64>, cov: CovarianceSpec) -> Self {
        Self { mean, cov }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceSpec {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `ln N(x; μ, Σ)` via a Cholesky factor of Σ.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "log_density input",
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("log_density input"));
        }
        let factor = CholeskyFactor::new(&self.cov.materialize(), "component covariance")?;
        let residual = DVector::from_column_slice(x) - &self.mean;
        Ok(factor.gaussian_log_density(&residual))
    }

    /// Restricts mean and covariance to `range` (0-based, half-open).
    pub fn marginal(&self, range: Range<usize>) -> MvnComponent {
        MvnComponent::new_unchecked(
            self.mean.rows(range.start, range.len()).into_owned(),
            self.cov.restrict(range.start, range.end),
        )
    }

    /// Same component with its covariance stored as an explicit matrix.
    pub fn densified(&self) -> MvnComponent {
        match self.cov {
            CovarianceSpec::Dense { .. } => self.clone(),
            _ => MvnComponent::new_unchecked(
                self.mean.clone(),
                CovarianceSpec::Dense {
                    matrix: self.cov.materialize(),
                },
            ),
        }
    }
}

/// A `K`-component Gaussian mixture over a horizon of `T` steps, the
/// day-ahead object that intraday updates start from.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureForecast {
    id: String,
    horizon: usize,
    components: Vec<MvnComponent>,
    weights: Vec<f64>,
    condition: Vec<f64>,
}

impl MixtureForecast {
    /// Mixture with uniform weights `1/K`.
    pub fn uniform(id: impl Into<String>, components: Vec<MvnComponent>) -> Result<Self> {
        let k = components.len();
        if k == 0 {
            return Err(Error::InvalidWeights("mixture needs at least one component".into()));
        }
        Self::new(id, components, vec![1.0 / k as f64; k])
    }

    pub fn new(id: impl Into<String>, components: Vec<MvnComponent>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidWeights("mixture needs at least one component".into()));
        };
        let horizon = first.dim();
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                context: "mixture weights vs components",
                expected: components.len(),
                found: weights.len(),
            });
        }
        check_simplex(&weights)?;
        let mut dict: Option<&Arc<PatternDictionary>> = None;
        for c in &components {
            if c.dim() != horizon {
                return Err(Error::DimensionMismatch {
                    context: "component horizon",
                    expected: horizon,
                    found: c.dim(),
                });
            }
            if let Some(d) = c.cov().dictionary() {
                match dict {
                    None => dict = Some(d),
                    Some(prev) if Arc::ptr_eq(prev, d) => {}
                    Some(_) => {
                        return Err(Error::InvalidCovariance(
                            "all pdcc components must share one dictionary".into(),
                        ))
                    }
                }
            }
        }
        Ok(Self {
            id: id.into(),
            horizon,
            components,
            weights,
            condition: Vec::new(),
        })
    }

    /// Attaches the (opaque) condition record this forecast was issued for.
    pub fn with_condition(mut self, condition: Vec<f64>) -> Self {
        self.condition = condition;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MvnComponent] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn condition(&self) -> &[f64] {
        &self.condition
    }

    /// The dictionary shared by PDCC components, if any.
    pub fn dictionary(&self) -> Option<&Arc<PatternDictionary>> {
        self.components.iter().find_map(|c| c.cov().dictionary())
    }

    /// Restricts every component to `range` (0-based, half-open); weights
    /// are unchanged.
    pub fn marginalize(&self, range: Range<usize>) -> Result<MixtureForecast> {
        if range.is_empty() {
            return Err(Error::EmptyRange);
        }
        if range.end > self.horizon {
            return Err(Error::OutOfBounds {
                start: range.start,
                end: range.end,
                horizon: self.horizon,
            });
        }
        Ok(MixtureForecast {
            id: self.id.clone(),
            horizon: range.len(),
            components: self.components.iter().map(|c| c.marginal(range.clone())).collect(),
            weights: self.weights.clone(),
            condition: self.condition.clone(),
        })
    }

    /// Copy with every covariance materialized to a dense matrix, so that
    /// repeated updates do not recompose PDCC covariances.
    pub fn densified(&self) -> MixtureForecast {
        MixtureForecast {
            components: self.components.iter().map(MvnComponent::densified).collect(),
            ..self.clone()
        }
    }

    /// Mixture log-density `ln Σ_k w_k N(x; μ_k, Σ_k)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.k());
        for (c, w) in self.components.iter().zip(&self.weights) {
            terms.push(w.ln() + c.log_density(x)?);
        }
        Ok(log_sum_exp(&terms))
    }

    /// Mixture mean `Σ_k w_k μ_k`.
    pub fn mean(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.horizon);
        for (c, w) in self.components.iter().zip(&self.weights) {
            out.axpy(*w, c.mean(), 1.0);
        }
        out
    }

    /// Mixture covariance `Σ_k w_k (Σ_k + μ_k μ_kᵀ) − μ μᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut out = DMatrix::zeros(self.horizon, self.horizon);
        for (c, w) in self.components.iter().zip(&self.weights) {
            out += (c.cov().materialize() + c.mean() * c.mean().transpose()) * *w;
        }
        out - &mean * mean.transpose()
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<()> {
    if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "weight {bad} is not a finite non-negative number"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// `ln Σ exp(v_i)`, shifted by the maximum. Returns `-∞` when every term is
/// `-∞` (or the slice is empty).
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max.is_infinite() || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
