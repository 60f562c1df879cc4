//! Per-trial update rules.
//!
//! The budgeted gradient-descent learner keeps at most `B` support vectors.
//! While the budget has room it runs plain kernel OGD with a projection onto
//! the coefficient box `[0, γη]`. Once full, the shrinkage part of the
//! gradient step uses an unbiased random estimate of `f` that has exactly
//! one support vector zeroed out, so inserting the new example keeps `|S| = B`.
//! The discarded support vector is drawn from a sampling distribution that
//! is either uniform or biased towards small coefficients.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Instance, Label};
use crate::kernel::KernelSpec;
use crate::loss::Loss;
use crate::model::{BudgetedModel, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error("sampling weights sum to zero")]
    DegenerateWeights,
    #[error("non-selected support vector {index} has discard probability 1")]
    DivisionDegenerate { index: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Step size, regularization, coefficient cap and budget of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// `None` for the unbounded learners.
    pub budget: Option<usize>,
}

impl HyperParams {
    pub fn new(eta: f64, lambda: f64, gamma: f64, budget: Option<usize>) -> Self {
        Self {
            eta,
            lambda,
            gamma,
            budget,
        }
    }

    pub fn eta_lambda(&self) -> f64 {
        self.eta * self.lambda
    }

    pub fn gamma_eta(&self) -> f64 {
        self.gamma * self.eta
    }

    /// Checks the parameters a learner of `kind` actually reads.
    pub fn validate_for(&self, kind: LearnerKind) -> Result<(), LearnerError> {
        let bad = |msg: String| Err(LearnerError::InvalidParams(msg));
        match kind {
            LearnerKind::BogdUniform | LearnerKind::BogdNonUniform | LearnerKind::Ogd => {
                if !(self.eta > 0.0 && self.eta.is_finite()) {
                    return bad(format!("eta must be positive, got {}", self.eta));
                }
                if !(self.lambda > 0.0 && self.lambda.is_finite()) {
                    return bad(format!("lambda must be positive, got {}", self.lambda));
                }
                if self.eta_lambda() > 0.5 {
                    return bad(format!("lambda*eta = {} exceeds 1/2", self.eta_lambda()));
                }
            }
            LearnerKind::Perceptron | LearnerKind::Rbp => {}
        }
        if kind.is_gradient_budgeted() && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        match (kind.is_budgeted(), self.budget) {
            (true, None) => bad(format!("{kind} requires a budget")),
            (true, Some(b)) if b < 2 => bad(format!("budget must be at least 2, got {b}")),
            (false, Some(_)) => bad(format!("{kind} does not take a budget")),
            _ => Ok(()),
        }
    }
}

/// Probability of discarding each current support vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    p: Vec<f64>,
}

impl SamplingDistribution {
    pub fn uniform(size: usize) -> Self {
        assert!(size >= 1, "distribution over an empty support set");
        Self {
            p: vec![1.0 / size as f64; size],
        }
    }

    /// `pᵢ = 1 − s·wᵢ` with `s = (B − 1) / Σ w` and `wᵢ = αᵢ√κ(xᵢ, xᵢ)`.
    ///
    /// Entries that come out negative are set to 0 and the rest renormalized.
    pub fn nonuniform(model: &BudgetedModel) -> Result<Self, LearnerError> {
        let weights: Vec<f64> = model
            .effective_alphas()
            .zip(model.self_norms())
            .map(|(a, k)| a * k)
            .collect();
        Self::from_weights(&weights)
    }

    pub fn from_weights(weights: &[f64]) -> Result<Self, LearnerError> {
        let size = weights.len();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(LearnerError::DegenerateWeights);
        }
        if weights.iter().all(|&w| w == weights[0]) {
            return Ok(Self::uniform(size));
        }
        let s = (size as f64 - 1.0) / total;
        let mut p: Vec<f64> = weights.iter().map(|&w| (1.0 - s * w).max(0.0)).collect();
        let mass: f64 = p.iter().sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(LearnerError::DegenerateWeights);
        }
        if mass != 1.0 {
            p.iter_mut().for_each(|v| *v /= mass);
        }
        Ok(Self { p })
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Inverse-CDF draw from a single uniform variate. Zero-probability
    /// entries are never returned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        for (i, &p) in self.p.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
        // u landed in the rounding gap above the last partial sum.
        self.p.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Which distribution picks the support vector to discard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    Uniform,
    NonUniform,
}

impl Sampler {
    pub fn distribution(
        &self,
        model: &BudgetedModel,
    ) -> Result<SamplingDistribution, LearnerError> {
        match self {
            Sampler::Uniform => Ok(SamplingDistribution::uniform(model.len())),
            Sampler::NonUniform => SamplingDistribution::nonuniform(model),
        }
    }
}

/// `(aᵢ, bᵢ)` of the unbiased estimator `f̂ = Σ (aᵢZᵢ + bᵢ) yᵢ κ(xᵢ, ·)`.
///
/// They satisfy `aᵢpᵢ + bᵢ = αᵢ` (unbiasedness) and `λη(aᵢ + bᵢ) = αᵢ`
/// (the selected coefficient vanishes after the update).
pub fn estimator_coefficients(alpha: f64, p: f64, lambda_eta: f64) -> (f64, f64) {
    if alpha == 0.0 {
        return (0.0, 0.0);
    }
    let denom = lambda_eta * (1.0 - p);
    let a = (1.0 - lambda_eta) * alpha / denom;
    let b = (lambda_eta - p) * alpha / denom;
    (a, b)
}

/// Coefficients after a budget update: the selected one is zeroed, every
/// other one becomes `min((1 − λη)/(1 − pᵢ)·αᵢ, γη)`.
pub fn budget_update_weights(
    alphas: &[f64],
    dist: &SamplingDistribution,
    selected: usize,
    lambda_eta: f64,
    gamma_eta: f64,
) -> Result<Vec<f64>, LearnerError> {
    debug_assert_eq!(alphas.len(), dist.len());
    alphas
        .iter()
        .zip(dist.probs())
        .enumerate()
        .map(|(i, (&alpha, &p))| {
            if i == selected {
                Ok(0.0)
            } else if p >= 1.0 {
                Err(LearnerError::DivisionDegenerate { index: i })
            } else {
                Ok(((1.0 - lambda_eta) / (1.0 - p) * alpha).min(gamma_eta))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Support set unchanged; `f` only decayed (or, for the Perceptron
    /// family, left untouched).
    DecayOnly,
    Grow,
    Swap {
        discarded: usize,
    },
}

/// What happened on one trial. `raw`, `predicted` and `loss` describe the
/// model before the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub raw: f64,
    pub predicted: Label,
    pub mistake: bool,
    pub loss: f64,
    pub action: Action,
    /// The non-uniform sampler fell back to uniform on this trial.
    pub sampler_fallback: bool,
}

impl StepOutcome {
    fn observe(model: &BudgetedModel, example: &Instance) -> Self {
        let raw = model.predict_raw(&example.features);
        let predicted = Label::from_sign(raw);
        Self {
            raw,
            predicted,
            mistake: predicted != example.label,
            loss: Loss::Hinge.value(example.label.sign() * raw),
            action: Action::DecayOnly,
            sampler_fallback: false,
        }
    }

    pub fn margin(&self, label: Label) -> f64 {
        label.sign() * self.raw
    }

    pub fn discarded_index(&self) -> Option<usize> {
        match self.action {
            Action::Swap { discarded } => Some(discarded),
            _ => None,
        }
    }
}

/// One trial of bounded online gradient descent.
pub fn bogd_step<R: Rng + ?Sized>(
    model: &mut BudgetedModel,
    params: &HyperParams,
    sampler: Sampler,
    example: &Instance,
    trial: usize,
    rng: &mut R,
) -> Result<StepOutcome, LearnerError> {
    let loss = Loss::Hinge;
    let mut outcome = StepOutcome::observe(model, example);
    let derivative = loss.derivative(outcome.margin(example.label));
    let eta_lambda = params.eta_lambda();
    let gamma_eta = params.gamma_eta();
    let new_alpha = (-params.eta * derivative).min(gamma_eta);

    if derivative == 0.0 {
        model.decay(eta_lambda);
        return Ok(outcome);
    }

    if !model.is_full() {
        model.decay(eta_lambda);
        model.add_sv(example.features.clone(), example.label, new_alpha, trial)?;
        outcome.action = Action::Grow;
        return Ok(outcome);
    }

    model.materialize();
    let dist = match sampler.distribution(model) {
        Ok(d) => d,
        Err(LearnerError::DegenerateWeights) => {
            warn!("trial {trial}: degenerate sampling weights, using uniform");
            outcome.sampler_fallback = true;
            SamplingDistribution::uniform(model.len())
        }
        Err(e) => return Err(e),
    };
    let selected = dist.sample(rng);
    let alphas: Vec<f64> = model.effective_alphas().collect();
    let updated = budget_update_weights(&alphas, &dist, selected, eta_lambda, gamma_eta)?;
    model.set_alphas(&updated);
    model.remove_sv(selected)?;
    model.add_sv(example.features.clone(), example.label, new_alpha, trial)?;
    outcome.action = Action::Swap {
        discarded: selected,
    };
    Ok(outcome)
}

/// Kernel Perceptron: add the example with coefficient 1 on a mistake.
pub fn perceptron_step(
    model: &mut BudgetedModel,
    example: &Instance,
    trial: usize,
) -> Result<StepOutcome, LearnerError> {
    let mut outcome = StepOutcome::observe(model, example);
    if outcome.mistake {
        model.add_sv(example.features.clone(), example.label, 1.0, trial)?;
        outcome.action = Action::Grow;
    }
    Ok(outcome)
}

/// Unbounded kernel OGD: `f ← (1 − ηλ)f − η y ℓ′(y f(x)) κ(x, ·)`.
pub fn ogd_step(
    model: &mut BudgetedModel,
    params: &HyperParams,
    example: &Instance,
    trial: usize,
) -> Result<StepOutcome, LearnerError> {
    let mut outcome = StepOutcome::observe(model, example);
    let derivative = Loss::Hinge.derivative(outcome.margin(example.label));
    model.decay(params.eta_lambda());
    if derivative != 0.0 {
        model.add_sv(
            example.features.clone(),
            example.label,
            -params.eta * derivative,
            trial,
        )?;
        outcome.action = Action::Grow;
    }
    Ok(outcome)
}

/// Randomized budget Perceptron: on a mistake with a full budget, discard a
/// uniformly random support vector before inserting.
pub fn rbp_step<R: Rng + ?Sized>(
    model: &mut BudgetedModel,
    example: &Instance,
    trial: usize,
    rng: &mut R,
) -> Result<StepOutcome, LearnerError> {
    let mut outcome = StepOutcome::observe(model, example);
    if !outcome.mistake {
        return Ok(outcome);
    }
    outcome.action = if model.is_full() {
        let discarded = rng.gen_range(0..model.len());
        model.remove_sv(discarded)?;
        Action::Swap { discarded }
    } else {
        Action::Grow
    };
    model.add_sv(example.features.clone(), example.label, 1.0, trial)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerKind {
    BogdUniform,
    BogdNonUniform,
    Perceptron,
    Ogd,
    Rbp,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::BogdUniform,
        LearnerKind::BogdNonUniform,
        LearnerKind::Perceptron,
        LearnerKind::Ogd,
        LearnerKind::Rbp,
    ];

    pub fn is_budgeted(&self) -> bool {
        matches!(
            self,
            LearnerKind::BogdUniform | LearnerKind::BogdNonUniform | LearnerKind::Rbp
        )
    }

    fn is_gradient_budgeted(&self) -> bool {
        matches!(self, LearnerKind::BogdUniform | LearnerKind::BogdNonUniform)
    }

    /// Name used on the command line.
    pub fn cli_name(&self) -> &'static str {
        match self {
            LearnerKind::BogdUniform => "bogd",
            LearnerKind::BogdNonUniform => "bogd++",
            LearnerKind::Perceptron => "perceptron",
            LearnerKind::Ogd => "ogd",
            LearnerKind::Rbp => "rbp",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::BogdUniform => "BOGD",
            LearnerKind::BogdNonUniform => "BOGD++",
            LearnerKind::Perceptron => "Perceptron",
            LearnerKind::Ogd => "OGD",
            LearnerKind::Rbp => "RBP",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.cli_name().eq_ignore_ascii_case(s) || k.to_string() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// A learner of any kind together with its model and random source.
#[derive(Debug, Clone)]
pub struct OnlineLearner {
    kind: LearnerKind,
    params: HyperParams,
    model: BudgetedModel,
    rng: ChaCha8Rng,
    trial: usize,
}

impl OnlineLearner {
    pub fn new(
        kind: LearnerKind,
        params: HyperParams,
        kernel: KernelSpec,
        seed: u64,
    ) -> Result<Self, LearnerError> {
        params.validate_for(kind)?;
        Ok(Self {
            kind,
            params,
            model: BudgetedModel::new(kernel, params.budget),
            rng: ChaCha8Rng::seed_from_u64(seed),
            trial: 0,
        })
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn model(&self) -> &BudgetedModel {
        &self.model
    }

    pub fn into_model(self) -> BudgetedModel {
        self.model
    }

    pub fn step(&mut self, example: &Instance) -> Result<StepOutcome, LearnerError> {
        let trial = self.trial;
        self.trial += 1;
        let model = &mut self.model;
        match self.kind {
            LearnerKind::BogdUniform => bogd_step(
                model,
                &self.params,
                Sampler::Uniform,
                example,
                trial,
                &mut self.rng,
            ),
            LearnerKind::BogdNonUniform => bogd_step(
                model,
                &self.params,
                Sampler::NonUniform,
                example,
                trial,
                &mut self.rng,
            ),
            LearnerKind::Perceptron => perceptron_step(model, example, trial),
            LearnerKind::Ogd => ogd_step(model, &self.params, example, trial),
            LearnerKind::Rbp => rbp_step(model, example, trial, &mut self.rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SparseVector;
    use proptest::prelude::*;

    fn inst(pairs: &[(u32, f64)], label: Label) -> Instance {
        Instance::new(
            SparseVector::from_pairs(pairs.iter().copied()).unwrap(),
            label,
        )
    }

    fn model_with(alphas: &[f64]) -> BudgetedModel {
        let mut m = BudgetedModel::bounded(KernelSpec::gaussian(8.0), alphas.len());
        for (k, &a) in alphas.iter().enumerate() {
            m.add_sv(
                SparseVector::from_dense(&[k as f64 * 3.0]),
                Label::Positive,
                a,
                k,
            )
            .unwrap();
        }
        m
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn uniform_distributions() {
        assert_eq!(SamplingDistribution::uniform(4).probs(), &[0.25; 4]);
        assert_eq!(SamplingDistribution::uniform(2).probs(), &[0.5; 2]);
        let sum: f64 = SamplingDistribution::uniform(7).probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonuniform_hand_cases() {
        let d = SamplingDistribution::nonuniform(&model_with(&[0.7, 0.7, 0.7])).unwrap();
        assert_eq!(d, SamplingDistribution::uniform(3));

        let d = SamplingDistribution::nonuniform(&model_with(&[1.0, 1.0, 2.0])).unwrap();
        assert!(close(d.probs()[0], 0.5) && close(d.probs()[1], 0.5));
        assert_eq!(d.probs()[2], 0.0);

        let d = SamplingDistribution::nonuniform(&model_with(&[1.0, 1.0, 6.0])).unwrap();
        assert!(close(d.probs()[0], 0.5) && close(d.probs()[1], 0.5));
        assert_eq!(d.probs()[2], 0.0);
    }

    #[test]
    fn nonuniform_degenerate() {
        assert_eq!(
            SamplingDistribution::from_weights(&[0.0, 0.0]),
            Err(LearnerError::DegenerateWeights)
        );
    }

    #[test]
    fn estimator_hand_case() {
        let (a, b) = estimator_coefficients(0.4, 0.5, 0.25);
        assert!(close(a, 2.4) && close(b, -0.8));
        assert!(close(a * 0.5 + b, 0.4));
        assert!(close(0.25 * (a + b), 0.4));

        assert_eq!(estimator_coefficients(0.0, 0.3, 0.1), (0.0, 0.0));

        let (a, b) = estimator_coefficients(0.6, 0.2, 0.2);
        assert_eq!(b, 0.0);
        assert!(close(a, 0.6 / 0.2));
    }

    #[test]
    fn budget_update_hand_cases() {
        let dist = SamplingDistribution::uniform(2);
        let w = budget_update_weights(&[0.4, 0.9], &dist, 1, 0.25, 1.0).unwrap();
        assert!(close(w[0], 0.6));
        assert_eq!(w[1], 0.0);

        let dist = SamplingDistribution::uniform(10);
        let alphas: Vec<f64> = (1..=10).map(|k| k as f64 / 20.0).collect();
        let w = budget_update_weights(&alphas, &dist, 3, 0.1, 10.0).unwrap();
        for (i, (&before, &after)) in alphas.iter().zip(&w).enumerate() {
            if i == 3 {
                assert_eq!(after, 0.0);
            } else {
                assert!(close(before, after));
            }
        }
    }

    #[test]
    fn budget_update_rejects_certain_survivor() {
        let dist = SamplingDistribution { p: vec![0.0, 1.0] };
        assert_eq!(
            budget_update_weights(&[0.5, 0.5], &dist, 0, 0.1, 1.0),
            Err(LearnerError::DivisionDegenerate { index: 1 })
        );
    }

    #[test]
    fn sampler_never_picks_zero_mass() {
        let dist = SamplingDistribution {
            p: vec![0.5, 0.5, 0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| dist.sample(&mut rng) != 2));
    }

    fn params(budget: usize) -> HyperParams {
        HyperParams::new(0.5, 0.1, 2.0, Some(budget))
    }

    #[test]
    fn bogd_first_trial_grows() {
        let mut m = BudgetedModel::bounded(KernelSpec::gaussian(8.0), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = bogd_step(
            &mut m,
            &params(3),
            Sampler::Uniform,
            &inst(&[(1, 1.0)], Label::Positive),
            0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.raw, 0.0);
        assert_eq!(out.loss, 1.0);
        assert_eq!(out.action, Action::Grow);
        assert_eq!(m.len(), 1);
        assert!(close(m.effective_alpha(0), 0.5));
    }

    #[test]
    fn bogd_confident_trial_only_decays() {
        let mut m = model_with(&[1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = params(3);
        let out = bogd_step(
            &mut m,
            &p,
            Sampler::Uniform,
            &inst(&[], Label::Positive),
            1,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.margin(Label::Positive), 1.5);
        assert_eq!(out.action, Action::DecayOnly);
        assert_eq!(m.len(), 1);
        assert!(close(m.effective_alpha(0), 1.5 * (1.0 - p.eta_lambda())));
    }

    #[test]
    fn bogd_full_budget_swaps() {
        for sampler in [Sampler::Uniform, Sampler::NonUniform] {
            let mut m = model_with(&[0.2, 0.5, 0.3]);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let x = inst(&[(1, 100.0)], Label::Negative);
            let before: Vec<_> = m.support_vectors().to_vec();
            let out = bogd_step(&mut m, &params(3), sampler, &x, 9, &mut rng).unwrap();
            let discarded = out.discarded_index().expect("swap");
            assert_eq!(m.len(), 3);
            assert!(!m
                .support_vectors()
                .iter()
                .any(|sv| sv.insertion_trial == before[discarded].insertion_trial));
            let newest = m.support_vectors().last().unwrap();
            assert_eq!(newest.insertion_trial, 9);
            assert_eq!(m.effective_alpha(2), 0.5);
        }
    }

    #[test]
    fn bogd_full_budget_confident_does_not_swap() {
        let mut m = model_with(&[2.0, 0.01]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = bogd_step(
            &mut m,
            &params(2),
            Sampler::Uniform,
            &inst(&[], Label::Positive),
            5,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.action, Action::DecayOnly);
    }

    #[test]
    fn new_coefficient_respects_small_gamma() {
        let mut m = BudgetedModel::bounded(KernelSpec::gaussian(8.0), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = HyperParams::new(0.5, 0.1, 0.5, Some(2));
        bogd_step(
            &mut m,
            &p,
            Sampler::Uniform,
            &inst(&[], Label::Positive),
            0,
            &mut rng,
        )
        .unwrap();
        assert!(close(m.effective_alpha(0), 0.25));
    }

    #[test]
    fn perceptron_cases() {
        let mut m = BudgetedModel::unbounded(KernelSpec::gaussian(8.0));
        let x = inst(&[(1, 1.0)], Label::Negative);
        let out = perceptron_step(&mut m, &x, 0).unwrap();
        assert_eq!(out.predicted, Label::Positive);
        assert!(out.mistake);
        assert_eq!(m.len(), 1);
        let out = perceptron_step(&mut m, &x, 1).unwrap();
        assert!(!out.mistake);
        assert_eq!(out.action, Action::DecayOnly);
        assert_eq!(m.len(), 1);
        assert_eq!(m.scale(), 1.0);
    }

    #[test]
    fn ogd_cases() {
        let p = HyperParams::new(0.5, 0.1, 1.0, None);
        let mut m = BudgetedModel::unbounded(KernelSpec::gaussian(8.0));
        let x = inst(&[(1, 1.0)], Label::Positive);
        let out = ogd_step(&mut m, &p, &x, 0).unwrap();
        assert_eq!(out.action, Action::Grow);
        assert!(close(m.effective_alpha(0), 0.5));

        let mut m = BudgetedModel::unbounded(KernelSpec::gaussian(8.0));
        m.add_sv(x.features.clone(), Label::Positive, 2.0, 0)
            .unwrap();
        let out = ogd_step(&mut m, &p, &x, 1).unwrap();
        assert_eq!(out.action, Action::DecayOnly);
        assert_eq!(m.len(), 1);
        assert!(close(m.effective_alpha(0), 2.0 * 0.95));
    }

    #[test]
    fn rbp_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = BudgetedModel::bounded(KernelSpec::gaussian(8.0), 2);
        let neg = inst(&[(1, 1.0)], Label::Negative);
        assert_eq!(
            rbp_step(&mut m, &neg, 0, &mut rng).unwrap().action,
            Action::Grow
        );
        let pos = inst(&[(1, 1.0)], Label::Positive);
        assert_eq!(
            rbp_step(&mut m, &pos, 1, &mut rng).unwrap().action,
            Action::Grow
        );
        // f(x) = 0 now, so a negative example is a mistake on a full model.
        let out = rbp_step(&mut m, &neg, 2, &mut rng).unwrap();
        assert!(matches!(out.action, Action::Swap { .. }));
        assert_eq!(m.len(), 2);
        // Whichever survived, a far-away positive point is predicted +1 at a tie.
        let far = inst(&[(5, 1e3)], Label::Positive);
        let before = m.support_vectors().to_vec();
        let out = rbp_step(&mut m, &far, 3, &mut rng).unwrap();
        assert!(!out.mistake);
        assert_eq!(m.support_vectors(), before.as_slice());
    }

    #[test]
    fn params_validation() {
        let ok = HyperParams::new(1.0, 0.1, 1.0, Some(10));
        assert!(ok.validate_for(LearnerKind::BogdUniform).is_ok());
        assert!(ok.validate_for(LearnerKind::Rbp).is_ok());
        assert!(ok.validate_for(LearnerKind::Ogd).is_err());
        let too_big = HyperParams::new(2.0, 0.3, 1.0, Some(10));
        assert!(too_big.validate_for(LearnerKind::BogdUniform).is_err());
        let no_budget = HyperParams::new(1.0, 0.1, 1.0, None);
        assert!(no_budget.validate_for(LearnerKind::BogdNonUniform).is_err());
        assert!(no_budget.validate_for(LearnerKind::Perceptron).is_ok());
        let tiny = HyperParams::new(1.0, 0.1, 1.0, Some(1));
        assert!(tiny.validate_for(LearnerKind::Rbp).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.cli_name().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("forgetron".parse::<LearnerKind>().is_err());
    }

    proptest! {
        #[test]
        fn distribution_validity(weights in proptest::collection::vec(1e-3f64..10.0, 2..40)) {
            let d = SamplingDistribution::from_weights(&weights).unwrap();
            let sum: f64 = d.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(d.probs().iter().all(|p| (0.0..=1.0).contains(p)));
            let heaviest = weights
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            let min_p = d.probs().iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d.probs()[heaviest], min_p);
        }

        #[test]
        fn dominant_weight_never_sampled(rest in proptest::collection::vec(0.1f64..1.0, 2..8), seed in any::<u64>()) {
            let mut weights = rest.clone();
            let total: f64 = rest.iter().sum();
            // Raw p ≤ 0 iff (B−1)·w ≥ Σ w, i.e. w ≥ Σ others / (B − 2).
            let b = weights.len() + 1;
            weights.push(total / (b as f64 - 2.0) * 1.5);
            let d = SamplingDistribution::from_weights(&weights).unwrap();
            prop_assert_eq!(d.probs()[b - 1], 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                prop_assert!(d.sample(&mut rng) != b - 1);
            }
        }

        #[test]
        fn estimator_conditions(alpha in 0.0f64..5.0, p in 0.0f64..0.99, le in 1e-4f64..0.5) {
            let (a, b) = estimator_coefficients(alpha, p, le);
            let tol = 1e-9 * (1.0 + a.abs() + b.abs());
            prop_assert!((a * p + b - alpha).abs() < tol);
            prop_assert!((le * (a + b) - alpha).abs() < tol);
            prop_assert!(a >= 0.0);
        }
    }
}
