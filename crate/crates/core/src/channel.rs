//! Pieces shared by the two classifier channels.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AutodiffError, Params, Tape, Tensor, Var};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("sequence length {len} exceeds matrix width {width}")]
    LengthExceedsWidth { len: usize, width: usize },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}` has shape {found:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A classifier over a `[d × S]` sentence matrix producing class
/// probabilities.
pub trait Channel: Send + Sync {
    fn name(&self) -> &'static str;

    fn params(&self) -> &Params;

    fn params_mut(&mut self) -> &mut Params;

    fn num_classes(&self) -> usize;

    fn input_dim(&self) -> usize;

    /// Records the forward pass for one document. `input` is `[d × S]` with
    /// true length `len`; `dropout` carries the mask RNG during training.
    fn forward(
        &self,
        tape: &mut Tape,
        input: Var,
        len: usize,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<Var, ModelError>;

    /// Inference-mode probabilities for one sentence matrix.
    fn probabilities(&self, matrix: &Tensor, len: usize) -> Result<Vec<f64>, ModelError> {
        let mut tape = Tape::new();
        let input = tape.constant(matrix.clone());
        let p = self.forward(&mut tape, input, len, None)?;
        Ok(tape.value(p).data().to_vec())
    }
}

pub(crate) fn check_len(matrix: &Tensor, len: usize) -> Result<(), ModelError> {
    let width = matrix.dims2().map(|d| d.1).unwrap_or(0);
    if len == 0 {
        return Err(ModelError::EmptySequence);
    }
    if len > width {
        return Err(ModelError::LengthExceedsWidth { len, width });
    }
    Ok(())
}

pub(crate) fn uniform(rng: &mut impl Rng, shape: &[usize], bound: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("positive shape")
}

/// Glorot-uniform bound.
pub(crate) fn xavier(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn expect_shape<'a>(
    params: &'a Params,
    name: &str,
    expected: &[usize],
) -> Result<&'a Tensor, ModelError> {
    let t = params
        .get(name)
        .ok_or_else(|| ModelError::MissingParam(name.to_string()))?;
    if t.shape() != expected {
        return Err(ModelError::ParamShape {
            name: name.to_string(),
            expected: expected.to_vec(),
            found: t.shape().to_vec(),
        });
    }
    Ok(t)
}

pub(crate) fn param_dims2(params: &Params, name: &str) -> Result<(usize, usize), ModelError> {
    let t = params
        .get(name)
        .ok_or_else(|| ModelError::MissingParam(name.to_string()))?;
    t.dims2().ok_or_else(|| ModelError::ParamShape {
        name: name.to_string(),
        expected: vec![0, 0],
        found: t.shape().to_vec(),
    })
}

/// Inverted dropout: zero each unit with probability `rate` and scale the
/// survivors by `1/(1 − rate)`. Identity when `rng` is `None` or `rate` is 0.
pub(crate) fn dropout(
    tape: &mut Tape,
    x: Var,
    rate: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Var, ModelError> {
    match rng {
        Some(rng) if rate > 0.0 => {
            let keep = 1.0 - rate;
            let mask = (0..tape.value(x).len())
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect();
            Ok(tape.mul_const(x, mask)?)
        }
        _ => Ok(x),
    }
}

/// `softmax(W·x + b)`.
pub(crate) fn dense_softmax(
    tape: &mut Tape,
    params: &Params,
    prefix: &str,
    x: Var,
) -> Result<Var, ModelError> {
    let w = tape.param(&format!("{prefix}.w"), params.require(&format!("{prefix}.w"))?);
    let b = tape.param(&format!("{prefix}.b"), params.require(&format!("{prefix}.b"))?);
    let z = tape.matvec(w, x)?;
    let z = tape.add(z, b)?;
    Ok(tape.softmax(z)?)
}

/// Plain evaluation of a dense softmax head.
pub fn dense_head(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>, ModelError> {
    let mut tape = Tape::new();
    let xv = tape.constant(Tensor::vector(x.to_vec()));
    let wv = tape.constant(w.clone());
    let bv = tape.constant(b.clone());
    let z = tape.matvec(wv, xv)?;
    let z = tape.add(z, bv)?;
    let p = tape.softmax(z)?;
    Ok(tape.value(p).data().to_vec())
}
