//! Coefficient skewness and a Monte Carlo check of estimator unbiasedness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::learners::{estimator_coefficients, LearnerError, Sampler, SamplingDistribution};
use crate::model::BudgetedModel;

/// `H(f) = B Σ αᵢ²κ(xᵢ, xᵢ) − (Σ αᵢ√κ(xᵢ, xᵢ))²`, evaluated as `B` times the
/// sum of squared deviations of `αᵢ√κ(xᵢ, xᵢ)` from their mean, which is
/// the same quantity without the cancellation.
pub fn skewness(model: &BudgetedModel) -> f64 {
    let weights: Vec<f64> = model
        .effective_alphas()
        .zip(model.self_norms())
        .map(|(a, k)| a * k)
        .collect();
    skewness_of_weights(&weights)
}

pub fn skewness_of_weights(weights: &[f64]) -> f64 {
    let Some(&first) = weights.first() else {
        return 0.0;
    };
    if weights.iter().all(|&w| w == first) {
        return 0.0;
    }
    let n = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / n;
    n * weights
        .iter()
        .map(|&w| (w - mean) * (w - mean))
        .sum::<f64>()
}

/// Skewness values recorded at selected trials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkewnessReport {
    pub per_trial: Vec<(usize, f64)>,
}

impl SkewnessReport {
    pub fn record(&mut self, trial: usize, model: &BudgetedModel) {
        self.per_trial.push((trial, skewness(model)));
    }

    pub fn mean(&self) -> f64 {
        if self.per_trial.is_empty() {
            return 0.0;
        }
        self.per_trial.iter().map(|&(_, h)| h).sum::<f64>() / self.per_trial.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasednessReport {
    /// `|mean(aᵢZᵢ + bᵢ) − αᵢ|` per coordinate.
    pub deviations: Vec<f64>,
    /// Largest entry of `deviations`.
    pub max_deviation: f64,
    /// `maxᵢ aᵢ`
    pub max_a: f64,
    pub draws: usize,
}

impl UnbiasednessReport {
    /// `5·maxᵢ aᵢ / √draws`. Each coordinate's sample mean has standard
    /// error at most `aᵢ / (2√draws)`.
    pub fn tolerance(&self) -> f64 {
        5.0 * self.max_a / (self.draws as f64).sqrt()
    }

    pub fn passes(&self) -> bool {
        self.max_deviation < self.tolerance()
    }
}

/// Draws `draws` discard indices from the sampler's distribution for `model`
/// and compares the coordinate-wise mean of the estimator against the
/// model's effective coefficients.
pub fn unbiasedness_oracle(
    model: &BudgetedModel,
    sampler: Sampler,
    lambda_eta: f64,
    draws: usize,
    seed: u64,
) -> Result<UnbiasednessReport, LearnerError> {
    let dist = sampler.distribution(model)?;
    let alphas: Vec<f64> = model.effective_alphas().collect();
    Ok(unbiasedness_of(&alphas, &dist, lambda_eta, draws, seed))
}

pub fn unbiasedness_of(
    alphas: &[f64],
    dist: &SamplingDistribution,
    lambda_eta: f64,
    draws: usize,
    seed: u64,
) -> UnbiasednessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; alphas.len()];
    for _ in 0..draws {
        hits[dist.sample(&mut rng)] += 1;
    }
    let mut deviations = Vec::with_capacity(alphas.len());
    let mut max_a: f64 = 0.0;
    for ((&alpha, &p), &count) in alphas.iter().zip(dist.probs()).zip(&hits) {
        let (a, b) = estimator_coefficients(alpha, p, lambda_eta);
        let mean = if count == 0 {
            b
        } else {
            a * (count as f64 / draws as f64) + b
        };
        deviations.push((mean - alpha).abs());
        max_a = max_a.max(a);
    }
    UnbiasednessReport {
        max_deviation: deviations.iter().cloned().fold(0.0, f64::max),
        deviations,
        max_a,
        draws,
    }
}
