use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, BaselineError, SparseVector};
use crate::autodiff::{Optimizer, Params, Tape, Tensor, Var};
use crate::channel::{uniform, xavier};
use crate::fusion::argmax;

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 10,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 42,
        }
    }
}

/// One ReLU hidden layer and a softmax head, parameters `w1 [h×V]`, `b1`,
/// `w2 [C×h]`, `b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    params: Params,
}

impl Mlp {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.get("w1").and_then(|t| t.dims2()).map_or(0, |d| d.1)
    }

    fn record(&self, tape: &mut Tape, x: Var) -> Result<Var, BaselineError> {
        let p = |tape: &mut Tape, name: &str| tape.param(name, self.params.get(name).expect("built by mlp_train"));
        let w1 = p(tape, "w1");
        let b1 = p(tape, "b1");
        let w2 = p(tape, "w2");
        let b2 = p(tape, "b2");
        let h = tape.matvec(w1, x)?;
        let h = tape.add(h, b1)?;
        let h = tape.relu(h);
        let z = tape.matvec(w2, h)?;
        let z = tape.add(z, b2)?;
        Ok(tape.softmax(z)?)
    }

    pub fn probabilities(&self, x: &SparseVector) -> Result<Vec<f64>, BaselineError> {
        if x.dim() != self.dim() {
            return Err(BaselineError::Dimension {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let mut tape = Tape::new();
        let xv = tape.constant(Tensor::vector(x.to_dense()));
        let p = self.record(&mut tape, xv)?;
        Ok(tape.value(p).data().to_vec())
    }

    pub fn predict(&self, x: &SparseVector) -> Result<usize, BaselineError> {
        Ok(argmax(&self.probabilities(x)?))
    }
}

/// Minibatch Adam on mean cross-entropy.
pub fn mlp_train(
    data: &[(SparseVector, usize)],
    classes: usize,
    cfg: &MlpConfig,
) -> Result<Mlp, BaselineError> {
    let dim = check_training_set(data, classes)?;
    if cfg.hidden == 0 || cfg.batch_size == 0 {
        return Err(BaselineError::Config("hidden and batch_size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Params::new();
    params.insert("w1", uniform(&mut rng, &[cfg.hidden, dim], xavier(dim, cfg.hidden)));
    params.insert("b1", Tensor::zeros(&[cfg.hidden]));
    params.insert("w2", uniform(&mut rng, &[classes, cfg.hidden], xavier(cfg.hidden, classes)));
    params.insert("b2", Tensor::zeros(&[classes]));
    let mut model = Mlp { params };
    let mut opt = Optimizer::adam(cfg.learning_rate)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut tape = Tape::new();
            let mut losses = Vec::with_capacity(batch.len());
            for &i in batch {
                let (x, y) = &data[i];
                let xv = tape.constant(Tensor::vector(x.to_dense()));
                let p = model.record(&mut tape, xv)?;
                losses.push(tape.cross_entropy(p, *y, 1.0 / batch.len() as f64)?);
            }
            let all = tape.concat(&losses)?;
            let loss = tape.sum(all);
            tape.backward(loss)?;
            opt.step(&mut model.params, &tape.param_grads())?;
        }
    }
    Ok(model)
}
