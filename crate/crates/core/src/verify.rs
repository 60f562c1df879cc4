//! Self-checks behind the `verify` subcommand: the estimator's algebraic and
//! statistical properties, sampling-distribution validity, invariants under
//! long randomized runs, and decreasing average loss on a separable stream.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Label;
use crate::diagnostics::{skewness, skewness_of_weights, unbiasedness_oracle};
use crate::harness::{run_online_observed, TrialObserver, BOX_TOLERANCE};
use crate::kernel::{KernelSpec, SparseVector};
use crate::learners::{
    budget_update_weights, estimator_coefficients, HyperParams, LearnerKind, Sampler,
    SamplingDistribution, StepOutcome,
};
use crate::model::BudgetedModel;
use crate::synthetic;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        unbiasedness(),
        closed_form_equivalence(),
        distribution_validity(),
        invariant_fuzz(),
        sublinear_average_loss(),
        skewness_values(),
    ]
}

/// A bounded model holding `alphas` as effective coefficients.
pub fn model_from_alphas(alphas: &[f64]) -> BudgetedModel {
    let mut model = BudgetedModel::bounded(KernelSpec::gaussian(8.0), alphas.len().max(2));
    for (k, &a) in alphas.iter().enumerate() {
        model
            .add_sv(SparseVector::from_dense(&[k as f64]), Label::Positive, a, k)
            .expect("within budget");
    }
    model
}

/// 20 random 5-SV models per sampler, 200 000 draws each; at least 19 of 20
/// must land within `5·maxᵢ aᵢ/√draws`.
pub fn unbiasedness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b1a5);
    let mut lines = Vec::new();
    let mut passed = true;
    for sampler in [Sampler::Uniform, Sampler::NonUniform] {
        let mut ok = 0;
        for case in 0..20 {
            let alphas: Vec<f64> = (0..5).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let lambda_eta = [0.1, 0.25, 0.5][case % 3];
            let report = unbiasedness_oracle(
                &model_from_alphas(&alphas),
                sampler,
                lambda_eta,
                200_000,
                rng.gen(),
            )
            .expect("positive weights");
            ok += usize::from(report.passes());
        }
        passed &= ok >= 19;
        lines.push(format!("{sampler:?} {ok}/20"));
    }
    check("unbiasedness", passed, lines.join(", "))
}

/// The coefficient of each `yᵢκ(xᵢ, ·)` in the updated expansion, written
/// out from the estimator coefficients and projected onto `[0, γη]`.
fn direct_update(
    alphas: &[f64],
    p: &[f64],
    selected: usize,
    lambda_eta: f64,
    gamma_eta: f64,
) -> Vec<f64> {
    alphas
        .iter()
        .zip(p)
        .enumerate()
        .map(|(i, (&alpha, &pi))| {
            let (a, b) = estimator_coefficients(alpha, pi, lambda_eta);
            let z = if i == selected { 1.0 } else { 0.0 };
            (alpha - lambda_eta * (b + a * z)).clamp(0.0, gamma_eta)
        })
        .collect()
}

pub fn closed_form_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc105ed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let size = rng.gen_range(2..=20);
        let alphas: Vec<f64> = (0..size).map(|_| rng.gen_range(1e-3..2.0)).collect();
        let dist = if rng.gen_bool(0.5) {
            SamplingDistribution::uniform(size)
        } else {
            SamplingDistribution::from_weights(&alphas).expect("positive weights")
        };
        let lambda_eta = rng.gen_range(1e-4..=0.5);
        let gamma_eta = rng.gen_range(0.1..3.0);
        let selected = dist.sample(&mut rng);
        let fast = budget_update_weights(&alphas, &dist, selected, lambda_eta, gamma_eta)
            .expect("valid draw");
        let direct = direct_update(&alphas, dist.probs(), selected, lambda_eta, gamma_eta);
        for (x, y) in fast.iter().zip(&direct) {
            worst = worst.max((x - y).abs());
        }
    }
    check(
        "closed-form equivalence",
        worst <= 1e-12,
        format!("max |closed form - direct| = {worst:.3e} over 1000 instances"),
    )
}

pub fn distribution_validity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd157);
    let mut valid = true;
    for _ in 0..1000 {
        let size = rng.gen_range(2..=50);
        let weights: Vec<f64> = (0..size).map(|_| rng.gen_range(1e-6..5.0)).collect();
        let dist = SamplingDistribution::from_weights(&weights).expect("positive weights");
        valid &= distribution_is_valid(&dist);
    }
    let equal = SamplingDistribution::nonuniform(&model_from_alphas(&[0.3; 7])).unwrap();
    let reduces = equal == SamplingDistribution::uniform(7);
    let skewed = SamplingDistribution::nonuniform(&model_from_alphas(&[1.0, 1.0, 6.0])).unwrap();
    let repaired = (skewed.probs()[0] - 0.5).abs() < 1e-12
        && (skewed.probs()[1] - 0.5).abs() < 1e-12
        && skewed.probs()[2] == 0.0;
    check(
        "distribution validity",
        valid && reduces && repaired,
        format!(
            "valid={valid} equal-weight-uniform={reduces} (1,1,6)->{:?}",
            skewed.probs()
        ),
    )
}

pub fn distribution_is_valid(dist: &SamplingDistribution) -> bool {
    let sum: f64 = dist.probs().iter().sum();
    (sum - 1.0).abs() <= 1e-9 && dist.probs().iter().all(|p| (0.0..=1.0).contains(p))
}

/// Counts invariant violations across every trial of a run.
#[derive(Default)]
struct InvariantCounter {
    budget: usize,
    gamma_eta: Option<f64>,
    trials: usize,
    budget_violations: usize,
    box_violations: usize,
    negative_skewness: usize,
    invalid_distributions: usize,
}

impl TrialObserver for InvariantCounter {
    fn after_step(&mut self, _trial: usize, model: &BudgetedModel, _outcome: &StepOutcome) {
        self.trials += 1;
        self.budget_violations += usize::from(model.len() > self.budget);
        if let Some(limit) = self.gamma_eta {
            self.box_violations += model
                .effective_alphas()
                .filter(|a| !(0.0..=limit + BOX_TOLERANCE).contains(a))
                .count();
        }
        self.negative_skewness += usize::from(skewness(model) < 0.0);
        if model.len() == self.budget && self.gamma_eta.is_some() {
            let ok = SamplingDistribution::nonuniform(model)
                .map(|d| distribution_is_valid(&d))
                .unwrap_or(true);
            self.invalid_distributions += usize::from(!ok);
        }
    }
}

/// 50 000 trials per budgeted learner over a mix of hyperparameters.
pub fn invariant_fuzz() -> Check {
    let configs = [
        (1.0, 0.4, 0.5, 10),
        (0.5, 0.5, 1.0, 25),
        (2.0, 0.01, 4.0, 5),
        (0.125, 1.0, 0.25, 40),
        (4.0, 0.1, 16.0, 2),
    ];
    let mut totals = InvariantCounter::default();
    for kind in [
        LearnerKind::BogdUniform,
        LearnerKind::BogdNonUniform,
        LearnerKind::Rbp,
    ] {
        for (k, &(eta, lambda, gamma, budget)) in configs.iter().enumerate() {
            let ds = synthetic::noisy_stream(10_000, 4, 0.15, 100 + k as u64);
            let params = HyperParams::new(eta, lambda, gamma, Some(budget));
            let mut counter = InvariantCounter {
                budget,
                gamma_eta: (kind != LearnerKind::Rbp).then(|| params.gamma_eta()),
                ..Default::default()
            };
            // A violation the harness itself catches is reported as one.
            if run_online_observed(
                &ds,
                kind,
                params,
                KernelSpec::gaussian(1.0),
                k as u64,
                &mut counter,
            )
            .is_err()
            {
                counter.budget_violations += 1;
            }
            totals.trials += counter.trials;
            totals.budget_violations += counter.budget_violations;
            totals.box_violations += counter.box_violations;
            totals.negative_skewness += counter.negative_skewness;
            totals.invalid_distributions += counter.invalid_distributions;
        }
    }
    let passed = totals.budget_violations == 0
        && totals.box_violations == 0
        && totals.negative_skewness == 0
        && totals.invalid_distributions == 0;
    check(
        "budget/box invariants",
        passed,
        format!(
            "{} trials: {} budget, {} box, {} negative-H, {} invalid-p violations",
            totals.trials,
            totals.budget_violations,
            totals.box_violations,
            totals.negative_skewness,
            totals.invalid_distributions
        ),
    )
}

/// Per-trial hinge losses of one run.
#[derive(Default)]
struct LossTrace(Vec<f64>);

impl TrialObserver for LossTrace {
    fn after_step(&mut self, _: usize, _: &BudgetedModel, outcome: &StepOutcome) {
        self.0.push(outcome.loss);
    }
}

/// First- and second-half mean hinge loss of uniform BOGD on a separable
/// stream of `T = 20 000` with `η = 1/√T` and `ληT = 1`. With `η` this small
/// a budget of 100 leaves the margins near zero, so the run uses B = 1000.
pub fn half_losses(seed: u64) -> (f64, f64) {
    let trials = 20_000;
    let ds = synthetic::separable_stream(trials, 2, 0.1, seed);
    let eta = 1.0 / (trials as f64).sqrt();
    let lambda = 1.0 / (eta * trials as f64);
    let params = HyperParams::new(eta, lambda, 16.0, Some(1000));
    let mut trace = LossTrace::default();
    run_online_observed(
        &ds,
        LearnerKind::BogdUniform,
        params,
        KernelSpec::gaussian(1.0),
        seed,
        &mut trace,
    )
    .expect("valid parameters");
    let half = trials / 2;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    (mean(&trace.0[..half]), mean(&trace.0[half..]))
}

pub fn sublinear_average_loss() -> Check {
    let (first, second) = half_losses(2024);
    check(
        "sub-linear average loss",
        second < first,
        format!("first half {first:.4}, second half {second:.4}"),
    )
}

pub fn skewness_values() -> Check {
    let equal = skewness(&model_from_alphas(&[0.7; 6]));
    let hand = skewness(&model_from_alphas(&[1.0, 3.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e7);
    let nonnegative = (0..1000).all(|_| {
        let w: Vec<f64> = (0..rng.gen_range(1..30))
            .map(|_| rng.gen_range(0.0..3.0))
            .collect();
        skewness_of_weights(&w) >= 0.0
    });
    check(
        "skewness",
        equal == 0.0 && hand == 4.0 && nonnegative,
        format!("equal={equal} (1,3)->{hand} nonnegative={nonnegative}"),
    )
}
