use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, BaselineError, SparseVector};
use crate::autodiff::softmax;
use crate::fusion::argmax;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossKind {
    /// One-vs-rest hinge loss (linear SVM).
    #[default]
    Hinge,
    /// Multinomial logistic loss.
    Logistic,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hinge" | "svm" => Ok(LossKind::Hinge),
            "logistic" | "logreg" => Ok(LossKind::Logistic),
            _ => Err(format!("unknown loss `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Hinge,
            epochs: 10,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// `C × V` weights plus a bias per class.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub loss: LossKind,
}

impl LinearModel {
    pub fn zeros(classes: usize, dim: usize, loss: LossKind) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; classes],
            bias: vec![0.0; classes],
            loss,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn check(&self, x: &SparseVector) -> Result<(), BaselineError> {
        if x.dim() != self.dim() {
            return Err(BaselineError::Dimension {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Raw class scores `W·x + b`.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>, BaselineError> {
        self.check(x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| x.dot(w) + b)
            .collect())
    }

    /// Softmax of the scores for logistic models; `None` for hinge models,
    /// whose margins are not probabilities.
    pub fn probabilities(&self, x: &SparseVector) -> Result<Option<Vec<f64>>, BaselineError> {
        match self.loss {
            LossKind::Logistic => Ok(Some(softmax(&self.scores(x)?)?)),
            LossKind::Hinge => Ok(None),
        }
    }

    pub fn predict(&self, x: &SparseVector) -> Result<usize, BaselineError> {
        Ok(argmax(&self.scores(x)?))
    }

    /// Frobenius norm of the weight matrix.
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Plain per-example SGD with L2 weight decay (biases are not decayed).
pub fn linear_train(
    data: &[(SparseVector, usize)],
    classes: usize,
    cfg: &LinearConfig,
) -> Result<LinearModel, BaselineError> {
    let dim = check_training_set(data, classes)?;
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(BaselineError::Config(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.l2 < 0.0 {
        return Err(BaselineError::Config("l2 must be nonnegative".into()));
    }
    let mut model = LinearModel::zeros(classes, dim, cfg.loss);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let lr = cfg.learning_rate;
    let decay = 1.0 - lr * cfg.l2;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &data[i];
            let scores = model.scores(x)?;
            // d loss / d score for each class
            let coef: Vec<f64> = match cfg.loss {
                LossKind::Hinge => scores
                    .iter()
                    .enumerate()
                    .map(|(c, s)| {
                        let t = if c == *y { 1.0 } else { -1.0 };
                        if t * s < 1.0 {
                            -t
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                LossKind::Logistic => softmax(&scores)?
                    .iter()
                    .enumerate()
                    .map(|(c, p)| p - if c == *y { 1.0 } else { 0.0 })
                    .collect(),
            };
            for (c, g) in coef.iter().enumerate() {
                let w = &mut model.weights[c];
                if cfg.l2 > 0.0 {
                    w.iter_mut().for_each(|v| *v *= decay);
                }
                if *g != 0.0 {
                    for &(j, v) in x.entries() {
                        w[j] -= lr * g * v;
                    }
                    model.bias[c] -= lr * g;
                }
            }
        }
    }
    Ok(model)
}
