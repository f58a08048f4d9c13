//! Classical baselines over TF-IDF features: linear SVM, logistic
//! regression, a one-hidden-layer MLP, and SMOTE oversampling.

mod linear;
mod mlp;
mod smote;
mod tfidf;

pub use linear::{linear_train, LinearConfig, LinearModel, LossKind};
pub use mlp::{mlp_train, Mlp, MlpConfig};
pub use smote::{smote_balance, smote_oversample};
pub use tfidf::{TfidfMode, TfidfVectorizer};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("vectorizer used before fit")]
    NotFitted,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature vector has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("label {label} outside {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("SMOTE needs at least 2 minority samples, got {0}")]
    TooFewMinority(usize),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Autodiff(#[from] crate::autodiff::AutodiffError),
}

/// Sorted `(column, value)` pairs over a fixed dimension.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// `entries` must be sorted by column with columns below `dim`.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.last().is_none_or(|e| e.0 < dim));
        Self { dim, entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        Self::new(values.len(), entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, col: usize) -> f64 {
        self.entries
            .binary_search_by_key(&col, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }
}

pub(crate) fn check_training_set(
    data: &[(SparseVector, usize)],
    classes: usize,
) -> Result<usize, BaselineError> {
    let first = data.first().ok_or(BaselineError::EmptyTrainingSet)?;
    let dim = first.0.dim();
    if classes < 1 {
        return Err(BaselineError::Config("need at least one class".into()));
    }
    for (x, y) in data {
        if x.dim() != dim {
            return Err(BaselineError::Dimension {
                expected: dim,
                found: x.dim(),
            });
        }
        if *y >= classes {
            return Err(BaselineError::LabelOutOfRange {
                label: *y,
                classes,
            });
        }
    }
    Ok(dim)
}
