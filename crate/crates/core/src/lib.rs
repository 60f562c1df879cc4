//! Budgeted kernel online learning.
//!
//! Bounded online gradient descent with uniform (`BOGD`) and non-uniform
//! (`BOGD++`) support-vector removal, together with the kernel Perceptron,
//! kernel OGD and the randomized budget Perceptron as baselines, and a
//! harness for running them over permuted datasets.

pub mod data;
pub mod diagnostics;
pub mod harness;
pub mod kernel;
pub mod learners;
pub mod loss;
pub mod model;
pub mod synthetic;
pub mod verify;

pub use data::{Dataset, Instance, Label};
pub use kernel::{KernelSpec, SparseVector};
pub use learners::{HyperParams, LearnerKind, OnlineLearner, Sampler, SamplingDistribution};
pub use model::BudgetedModel;
