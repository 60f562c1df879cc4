//! Sparse feature vectors and the kernels evaluated on them.

use std::fmt;

/// A sparse feature vector with 1-based, strictly increasing indices and no
/// stored zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SparseVectorError {
    #[error("feature index must be positive")]
    ZeroIndex,
    #[error("feature index {0} is not strictly increasing")]
    Unordered(u32),
    #[error("value for feature index {0} is not finite")]
    NonFinite(u32),
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(index, value)` pairs. Zero values are dropped;
    /// indices must be positive and strictly increasing.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, SparseVectorError>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut entries: Vec<(u32, f64)> = Vec::new();
        let mut last = 0u32;
        for (index, value) in pairs {
            if index == 0 {
                return Err(SparseVectorError::ZeroIndex);
            }
            if index <= last {
                return Err(SparseVectorError::Unordered(index));
            }
            if !value.is_finite() {
                return Err(SparseVectorError::NonFinite(index));
            }
            last = index;
            if value != 0.0 {
                entries.push((index, value));
            }
        }
        Ok(Self { entries })
    }

    /// Builds a vector from a dense slice; position `k` becomes index `k + 1`.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (k as u32 + 1, *v))
            .collect();
        Self { entries }
    }

    /// Dense copy of length `dim`; entries beyond `dim` are dropped.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(index, value) in &self.entries {
            if let Some(slot) = out.get_mut(index as usize - 1) {
                *slot = value;
            }
        }
        out
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// `‖self − other‖²` by merged traversal of both index sets.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    acc += a[i].1 * a[i].1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    acc += b[j].1 * b[j].1;
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let d = a[i].1 - b[j].1;
                    acc += d * d;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc += a[i..].iter().map(|&(_, v)| v * v).sum::<f64>();
        acc += b[j..].iter().map(|&(_, v)| v * v).sum::<f64>();
        acc
    }
}

impl fmt::Display for SparseVector {
    /// `index:value` pairs separated by single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (index, value)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{index}:{value}")?;
        }
        Ok(())
    }
}

/// Kernel function. Every variant satisfies `κ(x, x) ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(−‖a − b‖² / (2σ²))`
    Gaussian { width: f64 },
    /// `a·b / max(1, ‖a‖‖b‖)`, for tests that want hand-computable values.
    LinearNormalized,
}

impl KernelSpec {
    pub fn gaussian(width: f64) -> Self {
        assert!(
            width > 0.0 && width.is_finite(),
            "kernel width must be positive"
        );
        KernelSpec::Gaussian { width }
    }

    pub fn eval(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        match *self {
            KernelSpec::Gaussian { width } => {
                (-a.squared_distance(b) / (2.0 * width * width)).exp()
            }
            KernelSpec::LinearNormalized => {
                let norms = (a.squared_norm() * b.squared_norm()).sqrt();
                a.dot(b) / norms.max(1.0)
            }
        }
    }

    /// `κ(x, x)`; exactly 1 for the Gaussian kernel.
    pub fn self_similarity(&self, x: &SparseVector) -> f64 {
        match self {
            KernelSpec::Gaussian { .. } => 1.0,
            KernelSpec::LinearNormalized => {
                let n = x.squared_norm();
                n / n.max(1.0)
            }
        }
    }
}
