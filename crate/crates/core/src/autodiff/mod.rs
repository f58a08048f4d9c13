//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records each operation of a forward pass together with its
//! inputs; [`Tape::backward`] replays the record in reverse and accumulates
//! gradients into every node that requires one. Parameters live outside the
//! tape in a [`Params`] map and are copied onto a fresh tape per example.

mod check;
mod optim;
mod tape;
mod tensor;

use std::collections::BTreeMap;

pub use check::{finite_difference_check, GradCheckReport};
pub use optim::{Optimizer, OptimizerKind};
pub use tape::{
    conv_windows, kmax_indices, sigmoid, softmax, Activation, ElementwiseKind, Tape, Var,
    LOG_EPSILON,
};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} has a zero extent")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} does not hold {len} values")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("gold class {gold} out of range for {classes} classes")]
    ClassOutOfRange { gold: usize, classes: usize },
    #[error("prediction is not a probability vector (sum {sum})")]
    NotAProbability { sum: f64 },
    #[error("loss must be a scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("backward already ran on this tape; call reset() first")]
    BackwardTwice,
    #[error("non-finite gradient for parameter `{param}`")]
    NanGradient { param: String },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("learning rate must be positive and finite, got {0}")]
    InvalidLearningRate(f64),
}

/// Named parameter tensors, iterated in name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    map: BTreeMap<String, Tensor>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.map.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.map.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.map.get_mut(name)
    }

    /// Like `get`, but a missing name is an error.
    pub fn require(&self, name: &str) -> Result<&Tensor, AutodiffError> {
        self.get(name)
            .ok_or_else(|| AutodiffError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    /// Parameters whose name starts with `prefix`.
    pub fn with_prefix(&self, prefix: &str) -> Params {
        Params {
            map: self
                .map
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn extend(&mut self, other: Params) {
        self.map.extend(other.map);
    }

    pub fn num_values(&self) -> usize {
        self.map.values().map(Tensor::len).sum()
    }
}

/// Adds `src` into `dst` name by name.
pub fn accumulate_grads(dst: &mut BTreeMap<String, Vec<f64>>, src: &BTreeMap<String, Vec<f64>>) {
    for (name, g) in src {
        match dst.get_mut(name) {
            Some(d) => d.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => {
                dst.insert(name.clone(), g.clone());
            }
        }
    }
}
