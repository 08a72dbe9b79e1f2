//! Independent oracles and random fixtures shared by the integration tests.
//!
//! Densities here use an explicit inverse and determinant, never the
//! library's Cholesky path.

#![allow(dead_code)]

use gmm_intraday::{CovarianceSpec, MixtureForecast, MvnComponent};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Well-conditioned SPD matrix `A Aᵀ / n + 0.5 I`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random dense-covariance mixture with non-uniform weights.
pub fn random_mixture(rng: &mut impl Rng, horizon: usize, k: usize) -> MixtureForecast {
    let components = (0..k)
        .map(|_| {
            let cov = CovarianceSpec::dense(random_spd(rng, horizon)).unwrap();
            MvnComponent::new(random_vec(rng, horizon, 1.5), cov).unwrap()
        })
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    MixtureForecast::new("oracle", components, weights).unwrap()
}

/// MVN density from the textbook formula with `Σ⁻¹` and `det Σ`.
pub fn mvn_pdf(mean: &DVector<f64>, cov: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let d = mean.len() as f64;
    let inv = cov.clone().try_inverse().expect("invertible");
    let r = x - mean;
    let q = (r.transpose() * inv * &r)[(0, 0)];
    (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powf(d) * cov.determinant()).sqrt()
}

fn block(m: &DMatrix<f64>, r: std::ops::Range<usize>) -> DMatrix<f64> {
    m.view((r.start, r.start), (r.len(), r.len())).into_owned()
}

/// Mixture density of steps `range` at `x`.
pub fn mixture_pdf(fc: &MixtureForecast, range: std::ops::Range<usize>, x: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x);
    fc.components()
        .iter()
        .zip(fc.weights())
        .map(|(c, w)| {
            let mean = c.mean().rows(range.start, range.len()).into_owned();
            w * mvn_pdf(&mean, &block(&c.cov().materialize(), range.clone()), &x)
        })
        .sum()
}

/// `p(x_future | x_obs) = p(x_obs, x_future) / p(x_obs)` by brute force.
pub fn conditional_pdf(fc: &MixtureForecast, obs: &[f64], future: &[f64]) -> f64 {
    let t = fc.horizon();
    let joint: Vec<f64> = obs.iter().chain(future).copied().collect();
    let num = mixture_pdf(fc, 0..t, &joint);
    if obs.is_empty() {
        return num;
    }
    num / mixture_pdf(fc, 0..obs.len(), obs)
}

/// `γ_k ∝ π_k N(x_obs; μ_k, Σ_k)` by brute force.
pub fn responsibilities(fc: &MixtureForecast, obs: &[f64]) -> Vec<f64> {
    let r = 0..obs.len();
    let x = DVector::from_column_slice(obs);
    let terms: Vec<f64> = fc
        .components()
        .iter()
        .zip(fc.weights())
        .map(|(c, w)| {
            let mean = c.mean().rows(0, obs.len()).into_owned();
            w * mvn_pdf(&mean, &block(&c.cov().materialize(), r.clone()), &x)
        })
        .collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|v| v / total).collect()
}

/// Analytic mixture moments `(Σ γ μ, Σ γ (Σ + μμᵀ) − m mᵀ)`.
pub fn mixture_moments(weights: &[f64], means: &[DVector<f64>], covs: &[DMatrix<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let d = means[0].len();
    let mut m = DVector::zeros(d);
    let mut second = DMatrix::zeros(d, d);
    for ((w, mu), s) in weights.iter().zip(means).zip(covs) {
        m += mu * *w;
        second += (s + mu * mu.transpose()) * *w;
    }
    let cov = second - &m * m.transpose();
    (m, cov)
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    cov / var
}
