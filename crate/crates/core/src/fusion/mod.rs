//! The two-channel ensemble: probability fusion, the assembled model,
//! training and the binary model container.

mod container;
mod model;
mod train;

use std::fmt;
use std::str::FromStr;

pub use container::{load, read_model, save, write_model, ContainerError, FORMAT_VERSION, MAGIC};
pub use model::{
    ChannelSelection, Example, Featurizer, MultichannelModel, Prediction, Prepared, DEFAULT_MAX_LEN,
};
pub use train::{train, EpochRecord, History, TrainConfig};

use crate::channel::ModelError;
use crate::embedding::EmbeddingError;
use crate::eval::EvalError;

/// How the two channel distributions are combined before renormalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FusionRule {
    #[default]
    Product,
    Average,
    Maximum,
    Minimum,
    Addition,
}

impl FusionRule {
    pub const ALL: [FusionRule; 5] = [
        FusionRule::Product,
        FusionRule::Average,
        FusionRule::Maximum,
        FusionRule::Minimum,
        FusionRule::Addition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionRule::Product => "product",
            FusionRule::Average => "average",
            FusionRule::Maximum => "maximum",
            FusionRule::Minimum => "minimum",
            FusionRule::Addition => "addition",
        }
    }

    /// Identifier stored in the model container.
    pub fn id(self) -> u8 {
        match self {
            FusionRule::Product => 0,
            FusionRule::Average => 1,
            FusionRule::Maximum => 2,
            FusionRule::Minimum => 3,
            FusionRule::Addition => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.id() == id)
    }

    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            FusionRule::Product => a * b,
            FusionRule::Average => 0.5 * (a + b),
            FusionRule::Maximum => a.max(b),
            FusionRule::Minimum => a.min(b),
            FusionRule::Addition => a + b,
        }
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown fusion rule `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("probability vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("input is not a probability vector (sum {sum})")]
    NotAProbability { sum: f64 },
    #[error("a model needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class `{0}` listed twice")]
    DuplicateClass(String),
    #[error("model has no channel")]
    NoChannel,
    #[error("{0}")]
    Config(String),
    #[error("preprocessing fingerprint mismatch: model {model}, current {current}")]
    FingerprintMismatch { model: String, current: String },
    #[error("document is empty after cleaning")]
    EmptyDocument,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("validation set is empty but early stopping is enabled")]
    EmptyValidation,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

impl From<crate::autodiff::AutodiffError> for FusionError {
    fn from(e: crate::autodiff::AutodiffError) -> Self {
        FusionError::Model(e.into())
    }
}

fn check_probability(p: &[f64]) -> Result<(), FusionError> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || p.iter().any(|&x| !(x >= 0.0)) {
        return Err(FusionError::NotAProbability { sum });
    }
    Ok(())
}

/// Combines two class distributions element-wise and renormalizes. An
/// all-zero combination (possible with hard zeros) becomes uniform.
pub fn fuse(p: &[f64], q: &[f64], rule: FusionRule) -> Result<Vec<f64>, FusionError> {
    if p.len() != q.len() {
        return Err(FusionError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_probability(p)?;
    check_probability(q)?;
    let mut out: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| rule.combine(a, b)).collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    } else {
        log::warn!("{rule} fusion produced an all-zero vector; returning uniform");
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|x| *x = u);
    }
    Ok(out)
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_example() {
        let f = fuse(&[0.6, 0.4], &[0.5, 0.5], FusionRule::Product).unwrap();
        assert!((f[0] - 0.6).abs() < 1e-15 && (f[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn uniform_is_identity_for_product() {
        let p = [0.1, 0.7, 0.2];
        let u = [1.0 / 3.0; 3];
        let f = fuse(&p, &u, FusionRule::Product).unwrap();
        for (a, b) in f.iter().zip(&p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn average_of_opposites() {
        assert_eq!(fuse(&[1.0, 0.0], &[0.0, 1.0], FusionRule::Average).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn three_class_product() {
        let f = fuse(&[0.5, 0.4, 0.1], &[0.2, 0.5, 0.3], FusionRule::Product).unwrap();
        assert_eq!(argmax(&f), 1);
        let s = 0.10 + 0.20 + 0.03;
        assert!((f[1] - 0.20 / s).abs() < 1e-12);
    }

    #[test]
    fn disjoint_support_becomes_uniform() {
        for rule in [FusionRule::Product, FusionRule::Minimum] {
            assert_eq!(fuse(&[1.0, 0.0], &[0.0, 1.0], rule).unwrap(), vec![0.5, 0.5]);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fuse(&[1.0], &[0.5, 0.5], FusionRule::Product),
            Err(FusionError::LengthMismatch { left: 1, right: 2 })
        ));
        assert!(fuse(&[0.7, 0.7], &[0.5, 0.5], FusionRule::Product).is_err());
    }

    #[test]
    fn rule_names_and_ids_round_trip() {
        for r in FusionRule::ALL {
            assert_eq!(r.name().parse::<FusionRule>().unwrap(), r);
            assert_eq!(FusionRule::from_id(r.id()), Some(r));
        }
        assert!(FusionRule::from_id(5).is_none());
    }
}
