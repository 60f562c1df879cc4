//! Labelled sparse datasets in svmlight text format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::kernel::SparseVector;

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_sign(value: f64) -> Self {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: SparseVector,
    pub label: Label,
}

impl Instance {
    pub fn new(features: SparseVector, label: Label) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<Instance>,
    /// Largest feature index present.
    pub dimension: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("more than two distinct labels: {0:?}")]
    LabelDomain(Vec<f64>),
    #[error("unknown dataset `{0}` in manifest")]
    UnknownDataset(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Self {
        let dimension = instances
            .iter()
            .filter_map(|inst| inst.features.max_index())
            .max()
            .unwrap_or(0) as usize;
        Self {
            name: name.into(),
            instances,
            dimension,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Reorders instances by a seeded shuffle.
    pub fn permute(&self, seed: u64) -> Dataset {
        let order = permutation(self.len(), seed);
        Dataset {
            name: self.name.clone(),
            instances: order.iter().map(|&k| self.instances[k].clone()).collect(),
            dimension: self.dimension,
        }
    }

    /// Writes the dataset as svmlight text with `+1`/`-1` labels.
    pub fn write_sparse_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for inst in &self.instances {
            let label = match inst.label {
                Label::Positive => "+1",
                Label::Negative => "-1",
            };
            if inst.features.is_empty() {
                writeln!(out, "{label}")?;
            } else {
                writeln!(out, "{label} {}", inst.features)?;
            }
        }
        Ok(())
    }
}

/// A seeded permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Parses svmlight-format lines into a dataset.
///
/// Raw labels are mapped onto ±1: `{-1, +1}` is kept as is, `{0, 1}` maps
/// 0 to −1, `{1, 2}` maps 2 to −1, and any other pair maps the larger value
/// to +1. Blank lines and `#` comments are skipped; `qid:` tokens are ignored.
pub fn parse_sparse_text<R: BufRead>(reader: R, name: &str) -> Result<Dataset, DataError> {
    let mut raw: Vec<(f64, SparseVector)> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        raw.push(parse_line(body).map_err(|reason| DataError::Parse {
            line: line_no,
            reason,
        })?);
    }

    let mut distinct: Vec<f64> = Vec::new();
    for (y, _) in &raw {
        if !distinct.contains(y) {
            distinct.push(*y);
        }
    }
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if distinct.len() > 2 {
        return Err(DataError::LabelDomain(distinct));
    }
    let positive = positive_label(&distinct);

    let instances = raw
        .into_iter()
        .map(|(y, features)| {
            let label = if y == positive {
                Label::Positive
            } else {
                Label::Negative
            };
            Instance::new(features, label)
        })
        .collect();
    Ok(Dataset::new(name, instances))
}

/// The raw label value that maps to +1.
fn positive_label(distinct: &[f64]) -> f64 {
    let within = |set: &[f64]| distinct.iter().all(|y| set.contains(y));
    if within(&[-1.0, 1.0]) || within(&[0.0, 1.0]) || within(&[1.0, 2.0]) {
        1.0
    } else {
        distinct.last().copied().unwrap_or(1.0)
    }
}

fn parse_line(body: &str) -> Result<(f64, SparseVector), String> {
    let mut tokens = body.split_whitespace();
    let label_token = tokens.next().ok_or("missing label")?;
    let label: f64 = label_token
        .parse()
        .map_err(|_| format!("invalid label `{label_token}`"))?;
    if !label.is_finite() {
        return Err(format!("invalid label `{label_token}`"));
    }
    let mut pairs = Vec::new();
    for token in tokens {
        let (index, value) = token
            .split_once(':')
            .ok_or_else(|| format!("expected index:value, found `{token}`"))?;
        if index == "qid" {
            continue;
        }
        let index: u32 = index
            .parse()
            .map_err(|_| format!("invalid feature index `{index}`"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("invalid feature value `{value}`"))?;
        pairs.push((index, value));
    }
    let features = SparseVector::from_pairs(pairs).map_err(|e| e.to_string())?;
    Ok((label, features))
}

/// Loads a dataset from disk; gzip input is detected by its magic bytes.
pub fn load_dataset(path: &Path, name: &str) -> Result<Dataset, DataError> {
    let mut file = BufReader::new(File::open(path)?);
    let is_gzip = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let reader: Box<dyn Read> = if is_gzip {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_sparse_text(BufReader::new(reader), name)
}

/// Maps dataset names to files. TOML with a single `[datasets]` table;
/// relative paths resolve against the manifest's directory.
///
/// ```toml
/// [datasets]
/// german = "german.numer"
/// ```
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: BTreeMap<String, PathBuf>,
}

#[derive(Deserialize)]
struct ManifestFile {
    datasets: BTreeMap<String, PathBuf>,
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, DataError> {
        let file: ManifestFile =
            toml::from_str(text).map_err(|e| DataError::Manifest(e.to_string()))?;
        let entries = file
            .datasets
            .into_iter()
            .map(|(name, p)| {
                let resolved = if p.is_absolute() { p } else { base.join(p) };
                (name, resolved)
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn path_of(&self, name: &str) -> Option<&Path> {
        self.entries.get(name).map(PathBuf::as_path)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn load(&self, name: &str) -> Result<Dataset, DataError> {
        let path = self
            .path_of(name)
            .ok_or_else(|| DataError::UnknownDataset(name.to_string()))?;
        load_dataset(path, name)
    }
}
