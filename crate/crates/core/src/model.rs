//! Kernel expansion `f(·) = Σ αᵢ yᵢ κ(xᵢ, ·)` over a bounded support set.
//!
//! Coefficients are stored unsigned with the label factored out. A global
//! `scale` multiplies every stored coefficient lazily, so uniform decay is
//! O(1); `materialize` folds it back into the stored values.

use std::io::{self, Write};

use crate::data::Label;
use crate::kernel::{KernelSpec, SparseVector};

/// Below this the lazy scale is folded into the coefficients.
const SCALE_FLOOR: f64 = 1e-150;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub features: SparseVector,
    pub label: Label,
    /// Stored coefficient; the effective one is `scale * alpha`.
    pub alpha: f64,
    pub insertion_trial: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("budget of {0} support vectors is full")]
    BudgetFull(usize),
    #[error("support vector index {index} out of range (have {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone)]
pub struct BudgetedModel {
    svs: Vec<SupportVector>,
    /// `None` means unbounded.
    budget: Option<usize>,
    scale: f64,
    kernel: KernelSpec,
}

impl BudgetedModel {
    pub fn new(kernel: KernelSpec, budget: Option<usize>) -> Self {
        Self {
            svs: Vec::with_capacity(budget.unwrap_or(0)),
            budget,
            scale: 1.0,
            kernel,
        }
    }

    pub fn bounded(kernel: KernelSpec, budget: usize) -> Self {
        Self::new(kernel, Some(budget))
    }

    pub fn unbounded(kernel: KernelSpec) -> Self {
        Self::new(kernel, None)
    }

    pub fn len(&self) -> usize {
        self.svs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.svs.is_empty()
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn is_full(&self) -> bool {
        self.budget.is_some_and(|b| self.svs.len() >= b)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_vectors(&self) -> &[SupportVector] {
        &self.svs
    }

    pub fn effective_alpha(&self, index: usize) -> f64 {
        self.scale * self.svs[index].alpha
    }

    pub fn effective_alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.svs.iter().map(move |sv| self.scale * sv.alpha)
    }

    /// `√κ(xᵢ, xᵢ)` for every support vector.
    pub fn self_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.svs
            .iter()
            .map(move |sv| self.kernel.self_similarity(&sv.features).sqrt())
    }

    pub fn predict_raw(&self, x: &SparseVector) -> f64 {
        let sum: f64 = self
            .svs
            .iter()
            .map(|sv| sv.alpha * sv.label.sign() * self.kernel.eval(&sv.features, x))
            .sum();
        self.scale * sum
    }

    /// `sgn(f(x))` with ties going to +1.
    pub fn predict_label(&self, x: &SparseVector) -> Label {
        Label::from_sign(self.predict_raw(x))
    }

    /// Multiplies `f` by `1 − eta_lambda`.
    pub fn decay(&mut self, eta_lambda: f64) {
        debug_assert!((0.0..1.0).contains(&eta_lambda));
        self.scale *= 1.0 - eta_lambda;
        if self.scale < SCALE_FLOOR {
            self.materialize();
        }
    }

    pub fn materialize(&mut self) {
        if self.scale != 1.0 {
            for sv in &mut self.svs {
                sv.alpha *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    /// Projects onto `[0, gamma_eta]` coefficient-wise. Support vectors whose
    /// coefficient ends at zero are removed.
    pub fn clamp_to_box(&mut self, gamma_eta: f64) {
        self.materialize();
        for sv in &mut self.svs {
            sv.alpha = sv.alpha.clamp(0.0, gamma_eta);
        }
        self.svs.retain(|sv| sv.alpha > 0.0);
    }

    /// Adds a support vector whose effective coefficient is `alpha`.
    pub fn add_sv(
        &mut self,
        features: SparseVector,
        label: Label,
        alpha: f64,
        trial: usize,
    ) -> Result<(), ModelError> {
        if let Some(b) = self.budget {
            if self.svs.len() >= b {
                return Err(ModelError::BudgetFull(b));
            }
        }
        self.svs.push(SupportVector {
            features,
            label,
            alpha: alpha / self.scale,
            insertion_trial: trial,
        });
        Ok(())
    }

    pub fn remove_sv(&mut self, index: usize) -> Result<SupportVector, ModelError> {
        if index >= self.svs.len() {
            return Err(ModelError::IndexOutOfRange {
                index,
                len: self.svs.len(),
            });
        }
        Ok(self.svs.remove(index))
    }

    /// Overwrites the stored coefficients of a materialized model.
    pub(crate) fn set_alphas(&mut self, alphas: &[f64]) {
        debug_assert_eq!(self.scale, 1.0);
        debug_assert_eq!(alphas.len(), self.svs.len());
        for (sv, &a) in self.svs.iter_mut().zip(alphas) {
            sv.alpha = a;
        }
    }

    /// One line per support vector: `alpha label index:value ...` with the
    /// effective coefficient.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> io::Result<()> {
        for sv in &self.svs {
            write!(out, "{} {}", self.scale * sv.alpha, sv.label.as_i8())?;
            if !sv.features.is_empty() {
                write!(out, " {}", sv.features)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
