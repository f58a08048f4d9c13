//! BiLSTM channel with dot-product self-attention.
//!
//! Each position's merged state is `k_i = [→h_i ; ←h_i]`. Scores are taken
//! against the final merged state, `e_i = k_iᵀ k_n`, normalized with a
//! softmax into weights `a_i`, and the sentence vector is `h = Σ a_i k_i`.
//! A dense softmax head turns `h` into class probabilities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Params, Tape, Tensor, Var};
use crate::channel::{
    check_len, dense_head, dense_softmax, dropout, expect_shape, param_dims2, uniform, xavier,
    Channel, ModelError,
};

/// Gate order used throughout: input, forget, output, candidate.
pub const GATES: [&str; 4] = ["i", "f", "o", "g"];

/// Weights of one LSTM direction, indexed by [`GATES`].
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    /// `[d_h × d]` input weights.
    pub w: [Tensor; 4],
    /// `[d_h × d_h]` recurrent weights.
    pub u: [Tensor; 4],
    /// `[d_h]` biases.
    pub b: [Tensor; 4],
}

impl LstmParams {
    /// Uniform in `±1/√d_h`, forget-gate bias 1.0, other biases 0.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let w = std::array::from_fn(|_| uniform(rng, &[hidden, input], bound));
        let u = std::array::from_fn(|_| uniform(rng, &[hidden, hidden], bound));
        let b = std::array::from_fn(|g| Tensor::filled(&[hidden], if g == 1 { 1.0 } else { 0.0 }));
        Self { w, u, b }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor::zeros(&[hidden, input])),
            u: std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden])),
            b: std::array::from_fn(|_| Tensor::zeros(&[hidden])),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.b[0].len()
    }

    pub fn input_size(&self) -> usize {
        self.w[0].dims2().unwrap().1
    }

    pub fn insert_into(&self, params: &mut Params, prefix: &str) {
        for (g, name) in GATES.iter().enumerate() {
            params.insert(format!("{prefix}.w_{name}"), self.w[g].clone());
            params.insert(format!("{prefix}.u_{name}"), self.u[g].clone());
            params.insert(format!("{prefix}.b_{name}"), self.b[g].clone());
        }
    }

    pub fn from_params(params: &Params, prefix: &str) -> Result<Self, ModelError> {
        let (hidden, input) = param_dims2(params, &format!("{prefix}.w_i"))?;
        let get = |kind: &str, g: usize, shape: &[usize]| {
            expect_shape(params, &format!("{prefix}.{kind}_{}", GATES[g]), shape).cloned()
        };
        let mut w = Vec::new();
        let mut u = Vec::new();
        let mut b = Vec::new();
        for g in 0..4 {
            w.push(get("w", g, &[hidden, input])?);
            u.push(get("u", g, &[hidden, hidden])?);
            b.push(get("b", g, &[hidden])?);
        }
        let arr = |v: Vec<Tensor>| -> [Tensor; 4] { v.try_into().expect("four gates") };
        Ok(Self {
            w: arr(w),
            u: arr(u),
            b: arr(b),
        })
    }
}

/// One direction's parameters recorded on a tape.
struct BoundLstm {
    w: [Var; 4],
    u: [Var; 4],
    b: [Var; 4],
    hidden: usize,
}

impl BoundLstm {
    fn params(tape: &mut Tape, params: &Params, prefix: &str) -> Result<Self, ModelError> {
        let mut bind = |kind: &str| -> Result<[Var; 4], ModelError> {
            let mut vars = Vec::with_capacity(4);
            for gate in GATES {
                let name = format!("{prefix}.{kind}_{gate}");
                let t = params.require(&name)?;
                vars.push(tape.param(&name, t));
            }
            Ok(vars.try_into().expect("four gates"))
        };
        let w = bind("w")?;
        let u = bind("u")?;
        let b = bind("b")?;
        let hidden = tape.value(b[0]).len();
        Ok(Self { w, u, b, hidden })
    }

    fn constants(tape: &mut Tape, p: &LstmParams) -> Self {
        let w = std::array::from_fn(|g| tape.constant(p.w[g].clone()));
        let u = std::array::from_fn(|g| tape.constant(p.u[g].clone()));
        let b = std::array::from_fn(|g| tape.constant(p.b[g].clone()));
        Self {
            w,
            u,
            b,
            hidden: p.hidden_size(),
        }
    }

    /// `c_t = f⊙c + i⊙g`, `h_t = o⊙tanh(c_t)`.
    fn step(&self, tape: &mut Tape, x: Var, h: Var, c: Var) -> Result<(Var, Var), ModelError> {
        let mut gates = Vec::with_capacity(4);
        for g in 0..4 {
            let wx = tape.matvec(self.w[g], x)?;
            let uh = tape.matvec(self.u[g], h)?;
            let z = tape.add(wx, uh)?;
            let z = tape.add(z, self.b[g])?;
            gates.push(if g == 3 { tape.tanh(z) } else { tape.sigmoid(z) });
        }
        let (i, f, o, g) = (gates[0], gates[1], gates[2], gates[3]);
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_next = tape.add(fc, ig)?;
        let tc = tape.tanh(c_next);
        let h_next = tape.mul(o, tc)?;
        Ok((h_next, c_next))
    }

    /// Hidden states for columns `order` of `input`, returned in visit order.
    fn run(
        &self,
        tape: &mut Tape,
        input: Var,
        order: impl Iterator<Item = usize>,
    ) -> Result<Vec<Var>, ModelError> {
        let mut h = tape.constant(Tensor::zeros(&[self.hidden]));
        let mut c = tape.constant(Tensor::zeros(&[self.hidden]));
        let mut out = Vec::new();
        for t in order {
            let x = tape.column(input, t)?;
            (h, c) = self.step(tape, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }
}

/// Merged states `k_i` for the first `len` columns.
fn bilstm(
    tape: &mut Tape,
    fwd: &BoundLstm,
    bwd: &BoundLstm,
    input: Var,
    len: usize,
) -> Result<Vec<Var>, ModelError> {
    let forward = fwd.run(tape, input, 0..len)?;
    let mut backward = bwd.run(tape, input, (0..len).rev())?;
    backward.reverse();
    forward
        .into_iter()
        .zip(backward)
        .map(|(f, b)| Ok(tape.concat(&[f, b])?))
        .collect()
}

/// Scores, weights and context for merged states `ks`.
fn attend(tape: &mut Tape, ks: &[Var]) -> Result<(Var, Var, Var), ModelError> {
    let last = *ks.last().ok_or(ModelError::EmptySequence)?;
    let k = tape.stack_rows(ks)?;
    let scores = tape.matvec(k, last)?;
    let weights = tape.softmax(scores)?;
    let kt = tape.transpose(k)?;
    let context = tape.matvec(kt, weights)?;
    Ok((scores, weights, context))
}

/// One LSTM step on plain vectors.
pub fn lstm_step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut tape = Tape::new();
    let p = BoundLstm::constants(&mut tape, params);
    let x = tape.constant(Tensor::vector(x.to_vec()));
    let h = tape.constant(Tensor::vector(h_prev.to_vec()));
    let c = tape.constant(Tensor::vector(c_prev.to_vec()));
    let (h, c) = p.step(&mut tape, x, h, c)?;
    Ok((tape.value(h).data().to_vec(), tape.value(c).data().to_vec()))
}

/// Forward/backward concatenated hidden states, each of length `2·d_h`.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedStates {
    pub states: Vec<Vec<f64>>,
}

impl MergedStates {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Runs both directions over the first `len` columns of `matrix`. Columns
/// past `len` are never read.
pub fn bilstm_forward(
    fwd: &LstmParams,
    bwd: &LstmParams,
    matrix: &Tensor,
    len: usize,
) -> Result<MergedStates, ModelError> {
    check_len(matrix, len)?;
    let mut tape = Tape::new();
    let f = BoundLstm::constants(&mut tape, fwd);
    let b = BoundLstm::constants(&mut tape, bwd);
    let input = tape.constant(matrix.clone());
    let ks = bilstm(&mut tape, &f, &b, input, len)?;
    Ok(MergedStates {
        states: ks.iter().map(|k| tape.value(*k).data().to_vec()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOutput {
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub context: Vec<f64>,
}

pub fn attention(merged: &MergedStates) -> Result<AttentionOutput, ModelError> {
    let mut tape = Tape::new();
    let ks: Vec<Var> = merged
        .states
        .iter()
        .map(|k| tape.constant(Tensor::vector(k.clone())))
        .collect();
    let (e, a, h) = attend(&mut tape, &ks)?;
    Ok(AttentionOutput {
        scores: tape.value(e).data().to_vec(),
        weights: tape.value(a).data().to_vec(),
        context: tape.value(h).data().to_vec(),
    })
}

/// `softmax(W·h + b)`.
pub fn channel_head(h: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>, ModelError> {
    dense_head(h, w, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmConfig {
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            dropout: 0.3,
        }
    }
}

/// Parameters are stored under `lstm.fwd.*`, `lstm.bwd.*` and `lstm.head.*`.
#[derive(Clone, Debug)]
pub struct LstmChannel {
    config: LstmConfig,
    input_dim: usize,
    classes: usize,
    params: Params,
}

pub const LSTM_PREFIX: &str = "lstm";

impl LstmChannel {
    pub fn new(input_dim: usize, classes: usize, config: LstmConfig, rng: &mut impl Rng) -> Self {
        let mut params = Params::new();
        LstmParams::init(input_dim, config.hidden, rng).insert_into(&mut params, "lstm.fwd");
        LstmParams::init(input_dim, config.hidden, rng).insert_into(&mut params, "lstm.bwd");
        let merged = 2 * config.hidden;
        params.insert(
            "lstm.head.w",
            uniform(rng, &[classes, merged], xavier(merged, classes)),
        );
        params.insert("lstm.head.b", Tensor::zeros(&[classes]));
        Self {
            config,
            input_dim,
            classes,
            params,
        }
    }

    /// Rebuilds a channel from stored parameters; sizes come from shapes.
    pub fn from_params(params: Params, dropout: f64) -> Result<Self, ModelError> {
        let fwd = LstmParams::from_params(&params, "lstm.fwd")?;
        let bwd = LstmParams::from_params(&params, "lstm.bwd")?;
        if bwd.hidden_size() != fwd.hidden_size() || bwd.input_size() != fwd.input_size() {
            return Err(ModelError::Config("forward/backward LSTM sizes differ".into()));
        }
        let hidden = fwd.hidden_size();
        let (classes, _) = param_dims2(&params, "lstm.head.w")?;
        expect_shape(&params, "lstm.head.w", &[classes, 2 * hidden])?;
        expect_shape(&params, "lstm.head.b", &[classes])?;
        Ok(Self {
            config: LstmConfig { hidden, dropout },
            input_dim: fwd.input_size(),
            classes,
            params,
        })
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    pub fn direction(&self, backward: bool) -> Result<LstmParams, ModelError> {
        LstmParams::from_params(&self.params, if backward { "lstm.bwd" } else { "lstm.fwd" })
    }

    /// Forward pass that also returns the attention weights.
    pub fn forward_traced(
        &self,
        tape: &mut Tape,
        input: Var,
        len: usize,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Var, Var), ModelError> {
        check_len(tape.value(input), len)?;
        let fwd = BoundLstm::params(tape, &self.params, "lstm.fwd")?;
        let bwd = BoundLstm::params(tape, &self.params, "lstm.bwd")?;
        let ks = bilstm(tape, &fwd, &bwd, input, len)?;
        let (_, weights, context) = attend(tape, &ks)?;
        let context = dropout(tape, context, self.config.dropout, rng)?;
        let probs = dense_softmax(tape, &self.params, "lstm.head", context)?;
        Ok((probs, weights))
    }
}

impl Channel for LstmChannel {
    fn name(&self) -> &'static str {
        LSTM_PREFIX
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn forward(
        &self,
        tape: &mut Tape,
        input: Var,
        len: usize,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var, ModelError> {
        Ok(self.forward_traced(tape, input, len, rng)?.0)
    }
}
