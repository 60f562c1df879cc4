//! Experiment driver: the online predict-then-update protocol, averaging over
//! seeded permutations, hyperparameter grid search and report emission.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::data::{permutation, DataError, Dataset};
use crate::kernel::KernelSpec;
use crate::learners::{HyperParams, LearnerError, LearnerKind, OnlineLearner, StepOutcome};
use crate::model::BudgetedModel;

/// Slack allowed above `γη` when checking the coefficient box.
pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("dataset `{0}` is empty")]
    EmptyDataset(String),
    #[error("every grid cell violates lambda*eta <= 1/2")]
    EmptyGrid,
    #[error("trial {trial}: {detail}")]
    InvariantViolation { trial: usize, detail: String },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub mistakes: usize,
    pub trials: usize,
    pub mistake_rate: f64,
    pub cumulative_loss: f64,
    pub final_sv_count: usize,
    /// Support-set size after each trial.
    pub sv_counts: Vec<usize>,
    pub sampler_fallbacks: usize,
    /// Seconds spent in the learner loop.
    pub wall_time: f64,
    pub seed: u64,
}

impl RunMetrics {
    /// Equality of everything except `wall_time`.
    pub fn same_outcome(&self, other: &RunMetrics) -> bool {
        RunMetrics {
            wall_time: 0.0,
            ..self.clone()
        } == RunMetrics {
            wall_time: 0.0,
            ..other.clone()
        }
    }
}

/// Hooks called around every learner step of [`run_online_observed`].
pub trait TrialObserver {
    fn before_step(&mut self, _trial: usize, _model: &BudgetedModel) {}
    fn after_step(&mut self, _trial: usize, _model: &BudgetedModel, _outcome: &StepOutcome) {}
}

impl TrialObserver for () {}

/// Seed of the learner's own random source, derived from the run seed so it
/// differs from the permutation stream.
fn learner_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x5bd1_e995_9e37_79b9)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One pass over `dataset` in the order given by `seed`.
pub fn run_online(
    dataset: &Dataset,
    kind: LearnerKind,
    params: HyperParams,
    kernel: KernelSpec,
    seed: u64,
) -> Result<RunMetrics, HarnessError> {
    run_online_observed(dataset, kind, params, kernel, seed, &mut ())
}

pub fn run_online_observed<O: TrialObserver + ?Sized>(
    dataset: &Dataset,
    kind: LearnerKind,
    params: HyperParams,
    kernel: KernelSpec,
    seed: u64,
    observer: &mut O,
) -> Result<RunMetrics, HarnessError> {
    if dataset.is_empty() {
        return Err(HarnessError::EmptyDataset(dataset.name.clone()));
    }
    let order = permutation(dataset.len(), seed);
    let mut learner = OnlineLearner::new(kind, params, kernel, learner_seed(seed))?;
    let box_limit = match kind {
        LearnerKind::BogdUniform | LearnerKind::BogdNonUniform => {
            Some(params.gamma_eta() + BOX_TOLERANCE)
        }
        _ => None,
    };

    let mut mistakes = 0;
    let mut cumulative_loss = 0.0;
    let mut fallbacks = 0;
    let mut sv_counts = Vec::with_capacity(order.len());
    let start = Instant::now();
    for (trial, &k) in order.iter().enumerate() {
        observer.before_step(trial, learner.model());
        let outcome = learner.step(&dataset.instances[k])?;
        let model = learner.model();
        observer.after_step(trial, model, &outcome);

        mistakes += usize::from(outcome.mistake);
        cumulative_loss += outcome.loss;
        fallbacks += usize::from(outcome.sampler_fallback);
        sv_counts.push(model.len());

        if let Some(b) = params.budget {
            if model.len() > b {
                return Err(HarnessError::InvariantViolation {
                    trial,
                    detail: format!("{} support vectors exceed budget {b}", model.len()),
                });
            }
        }
        if let Some(limit) = box_limit {
            if let Some(a) = model
                .effective_alphas()
                .find(|a| !(0.0..=limit).contains(a))
            {
                return Err(HarnessError::InvariantViolation {
                    trial,
                    detail: format!("coefficient {a} outside [0, {limit}]"),
                });
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64();

    let trials = order.len();
    Ok(RunMetrics {
        mistakes,
        trials,
        mistake_rate: mistakes as f64 / trials as f64,
        cumulative_loss,
        final_sv_count: learner.model().len(),
        sv_counts,
        sampler_fallbacks: fallbacks,
        wall_time,
        seed,
    })
}

/// How the λ grid coefficients are turned into λ values for `T` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaRule {
    /// `λ = c / T²`
    TSquared,
    /// `λ = c / T`
    TLinear,
}

impl LambdaRule {
    pub fn lambda(&self, coeff: f64, trials: usize) -> f64 {
        let t = trials as f64;
        match self {
            LambdaRule::TSquared => coeff / (t * t),
            LambdaRule::TLinear => coeff / t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Grid {
    pub eta: Vec<f64>,
    /// Coefficients `c` of the λ rule.
    pub lambda: Vec<f64>,
    pub lambda_rule: LambdaRule,
    pub gamma: Vec<f64>,
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

impl Grid {
    /// η ∈ {2⁻³..2³}, λ ∈ {2⁻³..2³}/T², γ ∈ {2⁰..2⁴}.
    pub fn t_squared() -> Self {
        Self {
            eta: powers_of_two(-3, 3),
            lambda: powers_of_two(-3, 3),
            lambda_rule: LambdaRule::TSquared,
            gamma: powers_of_two(0, 4),
        }
    }

    /// As [`Grid::t_squared`] with `λ = c / T`.
    pub fn t_linear() -> Self {
        Self {
            lambda_rule: LambdaRule::TLinear,
            ..Self::t_squared()
        }
    }

    pub fn single(eta: f64, lambda_coeff: f64, rule: LambdaRule, gamma: f64) -> Self {
        Self {
            eta: vec![eta],
            lambda: vec![lambda_coeff],
            lambda_rule: rule,
            gamma: vec![gamma],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let grid: Grid =
            toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        if grid.eta.is_empty() || grid.lambda.is_empty() || grid.gamma.is_empty() {
            return Err(HarnessError::InvalidSpec(
                "grid axes must be nonempty".into(),
            ));
        }
        Ok(grid)
    }

    /// All `(η, λ, γ)` cells in lexicographic order for a learner of `kind`
    /// on `trials` examples. Axes a learner ignores collapse to 0.
    pub fn cells(&self, kind: LearnerKind, trials: usize) -> Vec<Cell> {
        let (etas, lambdas, gammas): (Vec<f64>, Vec<f64>, Vec<f64>) = match kind {
            LearnerKind::Perceptron | LearnerKind::Rbp => (vec![0.0], vec![0.0], vec![0.0]),
            LearnerKind::Ogd => (self.eta.clone(), self.lambdas(trials), vec![0.0]),
            LearnerKind::BogdUniform | LearnerKind::BogdNonUniform => {
                (self.eta.clone(), self.lambdas(trials), self.gamma.clone())
            }
        };
        let mut cells = Vec::with_capacity(etas.len() * lambdas.len() * gammas.len());
        for &eta in &etas {
            for &lambda in &lambdas {
                for &gamma in &gammas {
                    cells.push(Cell { eta, lambda, gamma });
                }
            }
        }
        cells.sort_by(Cell::lexicographic);
        cells
    }

    fn lambdas(&self, trials: usize) -> Vec<f64> {
        self.lambda
            .iter()
            .map(|&c| self.lambda_rule.lambda(c, trials))
            .collect()
    }
}

/// Grid selection on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum GridChoice {
    TSquared,
    TLinear,
    File(std::path::PathBuf),
}

impl FromStr for GridChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "default" | "tsquared" => GridChoice::TSquared,
            "tlinear" => GridChoice::TLinear,
            path => GridChoice::File(path.into()),
        })
    }
}

impl GridChoice {
    pub fn load(&self) -> Result<Grid, HarnessError> {
        match self {
            GridChoice::TSquared => Ok(Grid::t_squared()),
            GridChoice::TLinear => Ok(Grid::t_linear()),
            GridChoice::File(path) => Grid::from_toml(&std::fs::read_to_string(path)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Cell {
    fn lexicographic(a: &Cell, b: &Cell) -> Ordering {
        a.eta
            .total_cmp(&b.eta)
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.gamma.total_cmp(&b.gamma))
    }

    fn hash(&self) -> u64 {
        [self.eta, self.lambda, self.gamma]
            .iter()
            .fold(0x243f_6a88_85a3_08d3, |h, v| splitmix64(h ^ v.to_bits()))
    }

    pub fn params(&self, budget: Option<usize>) -> HyperParams {
        HyperParams::new(self.eta, self.lambda, self.gamma, budget)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(eta={}, lambda={:e}, gamma={})",
            self.eta, self.lambda, self.gamma
        )
    }
}

/// Seed of run `run` in `cell`: `base ⊕ hash(cell) ⊕ run`.
pub fn run_seed(base_seed: u64, cell: &Cell, run: usize) -> u64 {
    base_seed ^ cell.hash() ^ run as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub learner: LearnerKind,
    pub budget: Option<usize>,
    pub grid: Grid,
    pub runs: usize,
    pub base_seed: u64,
    pub kernel_width: f64,
}

impl ExperimentSpec {
    pub fn new(learner: LearnerKind, budget: Option<usize>) -> Self {
        Self {
            learner,
            budget,
            grid: Grid::t_squared(),
            runs: 20,
            base_seed: 0,
            kernel_width: 8.0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        match (self.learner.is_budgeted(), self.budget) {
            (true, None) => Err(HarnessError::InvalidSpec(format!(
                "{} requires a budget",
                self.learner
            ))),
            (false, Some(_)) => Err(HarnessError::InvalidSpec(format!(
                "{} does not take a budget",
                self.learner
            ))),
            _ if self.runs == 0 => Err(HarnessError::InvalidSpec("runs must be positive".into())),
            _ if self.kernel_width.is_nan() || self.kernel_width <= 0.0 => Err(
                HarnessError::InvalidSpec("kernel width must be positive".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::gaussian(self.kernel_width)
    }
}

/// Aggregate over the runs of one grid cell. `std` is the population
/// standard deviation of the per-run mistake rates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cell: Cell,
    pub runs: Vec<RunMetrics>,
    pub mean_mistake_rate: f64,
    pub std: f64,
    pub mean_sv_count: f64,
    pub mean_time: f64,
}

impl GridResult {
    pub fn from_runs(cell: Cell, runs: Vec<RunMetrics>) -> Self {
        let n = runs.len() as f64;
        let mean = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let mean_mistake_rate = mean(&|r| r.mistake_rate);
        let var = mean(&|r| (r.mistake_rate - mean_mistake_rate).powi(2));
        Self {
            cell,
            mean_mistake_rate,
            std: var.sqrt(),
            mean_sv_count: mean(&|r| r.final_sv_count as f64),
            mean_time: mean(&|r| r.wall_time),
            runs,
        }
    }

    pub fn sampler_fallbacks(&self) -> usize {
        self.runs.iter().map(|r| r.sampler_fallbacks).sum()
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: GridResult,
    /// Every evaluated cell, in lexicographic cell order.
    pub all: Vec<GridResult>,
    /// Cells dropped because `λη > 1/2`.
    pub skipped: Vec<Cell>,
}

/// Evaluates every feasible cell with `spec.runs` seeded permutations and
/// picks the one with the lowest mean mistake rate (ties: faster, then
/// earlier in cell order).
pub fn grid_search(spec: &ExperimentSpec, dataset: &Dataset) -> Result<GridOutcome, HarnessError> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(HarnessError::EmptyDataset(dataset.name.clone()));
    }
    let (cells, skipped): (Vec<Cell>, Vec<Cell>) = spec
        .grid
        .cells(spec.learner, dataset.len())
        .into_iter()
        .partition(|c| c.eta * c.lambda <= 0.5);
    if cells.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }

    let kernel = spec.kernel();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.runs).map(move |r| (c, r)))
        .collect();
    let results: Vec<RunMetrics> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cell = &cells[c];
            run_online(
                dataset,
                spec.learner,
                cell.params(spec.budget),
                kernel,
                run_seed(spec.base_seed, cell, r),
            )
        })
        .collect::<Result<_, _>>()?;

    let mut results = results.into_iter();
    let all: Vec<GridResult> = cells
        .iter()
        .map(|&cell| GridResult::from_runs(cell, results.by_ref().take(spec.runs).collect()))
        .collect();
    let best = all
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            a.mean_mistake_rate
                .total_cmp(&b.mean_mistake_rate)
                .then(a.mean_time.total_cmp(&b.mean_time))
                .then(i.cmp(j))
        })
        .map(|(_, r)| r.clone())
        .expect("nonempty grid");
    Ok(GridOutcome { best, all, skipped })
}

/// Budgets used for each dataset when none is given.
pub fn default_budgets(dataset: &str) -> Option<[usize; 3]> {
    match dataset {
        "german" => Some([100, 150, 200]),
        "spambase" => Some([100, 200, 300]),
        "w8a" => Some([200, 400, 600]),
        "magic04" => Some([500, 1000, 1500]),
        "ijcnn1" | "codrna" => Some([500, 1000, 2000]),
        _ => None,
    }
}

/// One report line: a (dataset, algorithm, budget) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub algorithm: LearnerKind,
    pub budget: Option<usize>,
    pub mistake_pct: f64,
    pub mistake_pct_std: f64,
    pub sv_count: f64,
    pub time_s: f64,
    pub cell: Cell,
    pub runs: usize,
}

pub const REPORT_HEADER: &str =
    "dataset,algorithm,budget,mistake_pct,mistake_pct_std_pop,sv_count,time_s,eta,lambda,gamma,runs";

impl ReportRow {
    pub fn from_grid(dataset: &str, spec: &ExperimentSpec, result: &GridResult) -> Self {
        Self {
            dataset: dataset.to_string(),
            algorithm: spec.learner,
            budget: spec.budget,
            mistake_pct: 100.0 * result.mean_mistake_rate,
            mistake_pct_std: 100.0 * result.std,
            sv_count: result.mean_sv_count,
            time_s: result.mean_time,
            cell: result.cell,
            runs: result.runs.len(),
        }
    }

    fn sort_key(&self) -> (&str, String, Option<usize>) {
        (&self.dataset, self.algorithm.to_string(), self.budget)
    }

    fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let opt = |v: f64, used: bool| {
            if used {
                format!("{v}")
            } else {
                "-".to_string()
            }
        };
        let uses_step = !matches!(self.algorithm, LearnerKind::Perceptron | LearnerKind::Rbp);
        let uses_gamma = matches!(
            self.algorithm,
            LearnerKind::BogdUniform | LearnerKind::BogdNonUniform
        );
        writeln!(
            out,
            "{},{},{},{:.3},{:.3},{:.3},{:.6},{},{},{},{}",
            self.dataset,
            self.algorithm,
            self.budget.map_or("-".to_string(), |b| b.to_string()),
            self.mistake_pct,
            self.mistake_pct_std,
            self.sv_count,
            self.time_s,
            opt(self.cell.eta, uses_step),
            opt(self.cell.lambda, uses_step),
            opt(self.cell.gamma, uses_gamma),
            self.runs,
        )
    }
}

/// Writes rows sorted by (dataset, algorithm, budget) under [`REPORT_HEADER`].
pub fn write_report<W: Write>(rows: &[ReportRow], mut out: W) -> io::Result<()> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    writeln!(out, "{REPORT_HEADER}")?;
    for row in sorted {
        row.write_to(&mut out)?;
    }
    out.flush()
}

pub fn emit_report(rows: &[ReportRow], path: &Path) -> io::Result<()> {
    write_report(rows, BufWriter::new(File::create(path)?))
}
