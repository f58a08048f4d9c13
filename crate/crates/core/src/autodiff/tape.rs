use std::collections::BTreeMap;

use super::{AutodiffError, Tensor};

/// Floor added inside the logarithm of the cross-entropy loss.
pub const LOG_EPSILON: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseKind {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Elementwise(ElementwiseKind, Var, Var),
    MulConst(Var, Vec<f64>),
    Scale(Var, f64),
    MatMul(Var, Var),
    MatVec(Var, Var),
    Transpose(Var),
    Activation(Activation, Var),
    Softmax(Var),
    Normalize(Var),
    CrossEntropy { pred: Var, gold: usize, weight: f64 },
    Sum(Var),
    Dot(Var, Var),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Column(Var, usize),
    Reshape(Var),
    Conv1d { input: Var, kernel: Var, bias: Var, len: usize },
    KMaxRows { input: Var, picks: Vec<Vec<usize>> },
}

/// Linear record of a forward computation, replayed in reverse by
/// [`Tape::backward`].
///
/// Every op appends exactly one node whose inputs are already on the tape, so
/// recording order is a topological order.
#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
    requires_grad: Vec<bool>,
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(String, Var)>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        debug_assert!(value.is_finite(), "non-finite value from {op:?}");
        self.values.push(value);
        self.ops.push(op);
        self.requires_grad.push(requires_grad);
        self.grads.push(None);
        Var(self.values.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.requires_grad[v.0])
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Records a named trainable parameter. Its gradient is reported by
    /// [`Tape::param_grads`] under the same name.
    pub fn param(&mut self, name: &str, value: &Tensor) -> Var {
        let v = self.push(value.clone(), Op::Leaf, true);
        self.params.push((name.to_string(), v));
        v
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.requires_grad[v.0]
    }

    pub fn elementwise(
        &mut self,
        kind: ElementwiseKind,
        a: Var,
        b: Var,
    ) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "elementwise",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let f = match kind {
            ElementwiseKind::Add => |x: f64, y: f64| x + y,
            ElementwiseKind::Sub => |x: f64, y: f64| x - y,
            ElementwiseKind::Mul => |x: f64, y: f64| x * y,
        };
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::Elementwise(kind, a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.elementwise(ElementwiseKind::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.elementwise(ElementwiseKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.elementwise(ElementwiseKind::Mul, a, b)
    }

    /// Multiplies by a constant mask (dropout).
    pub fn mul_const(&mut self, a: Var, mask: Vec<f64>) -> Result<Var, AutodiffError> {
        let ta = self.value(a);
        if ta.len() != mask.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul_const",
                left: ta.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let data = ta.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::MulConst(a, mask), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * factor).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        let rg = self.needs(&[a]);
        self.push(out, Op::Scale(a, factor), rg)
    }

    /// `[m×k] · [k×n] → [m×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let mismatch = || AutodiffError::ShapeMismatch {
            op: "matmul",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        };
        let (m, k) = ta.dims2().ok_or_else(mismatch)?;
        let (k2, n) = tb.dims2().ok_or_else(mismatch)?;
        if k != k2 {
            return Err(mismatch());
        }
        let (ad, bd) = (ta.data(), tb.data());
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut data[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = ad[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                for (o, &bv) in row.iter_mut().zip(&bd[p * n..(p + 1) * n]) {
                    *o += aip * bv;
                }
            }
        }
        let out = Tensor::matrix(m, n, data)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// `[m×k] · [k] → [m]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, AutodiffError> {
        let (tw, tx) = (self.value(w), self.value(x));
        let (m, k) = match tw.dims2() {
            Some(d) if tx.rank() == 1 && tx.len() == d.1 => d,
            _ => {
                return Err(AutodiffError::ShapeMismatch {
                    op: "matvec",
                    left: tw.shape().to_vec(),
                    right: tx.shape().to_vec(),
                })
            }
        };
        let (wd, xd) = (tw.data(), tx.data());
        let data = (0..m)
            .map(|i| wd[i * k..(i + 1) * k].iter().zip(xd).map(|(a, b)| a * b).sum())
            .collect();
        let out = Tensor::new(vec![m], data)?;
        let rg = self.needs(&[w, x]);
        Ok(self.push(out, Op::MatVec(w, x), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let ta = self.value(a);
        let (r, c) = ta.dims2().ok_or_else(|| AutodiffError::ShapeMismatch {
            op: "transpose",
            left: ta.shape().to_vec(),
            right: vec![],
        })?;
        let src = ta.data();
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        let out = Tensor::matrix(c, r, data)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Transpose(a), rg))
    }

    pub fn activation(&mut self, kind: Activation, a: Var) -> Var {
        let ta = self.value(a);
        let f: fn(f64) -> f64 = match kind {
            Activation::Tanh => f64::tanh,
            Activation::Sigmoid => sigmoid,
            Activation::Relu => |x| x.max(0.0),
        };
        let data = ta.data().iter().map(|&x| f(x)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        let rg = self.needs(&[a]);
        self.push(out, Op::Activation(kind, a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(Activation::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(Activation::Sigmoid, a)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.activation(Activation::Relu, a)
    }

    /// Softmax over all elements (callers pass vectors).
    pub fn softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let ta = self.value(a);
        let out = Tensor::new(ta.shape().to_vec(), softmax(ta.data())?)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Softmax(a), rg))
    }

    /// Divides a nonnegative vector by its sum.
    pub fn normalize(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let s = ta.data().iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let data = ta.data().iter().map(|x| x / s).collect();
        let out = Tensor::new(ta.shape().to_vec(), data).expect("shape preserved");
        let rg = self.needs(&[a]);
        self.push(out, Op::Normalize(a), rg)
    }

    /// `-weight * ln(pred[gold] + 1e-12)` as a `[1]` tensor.
    pub fn cross_entropy(
        &mut self,
        pred: Var,
        gold: usize,
        weight: f64,
    ) -> Result<Var, AutodiffError> {
        let tp = self.value(pred);
        if gold >= tp.len() {
            return Err(AutodiffError::ClassOutOfRange {
                gold,
                classes: tp.len(),
            });
        }
        let mass: f64 = tp.data().iter().sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(AutodiffError::NotAProbability { sum: mass });
        }
        let loss = -weight * (tp.data()[gold] + LOG_EPSILON).ln();
        let rg = self.needs(&[pred]);
        Ok(self.push(
            Tensor::vector(vec![loss]),
            Op::CrossEntropy { pred, gold, weight },
            rg,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let rg = self.needs(&[a]);
        self.push(Tensor::vector(vec![s]), Op::Sum(a), rg)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 1 || ta.shape() != tb.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "dot",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let s = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor::vector(vec![s]), Op::Dot(a, b), rg))
    }

    /// Flattens and concatenates its inputs into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        if parts.is_empty() {
            return Err(AutodiffError::EmptyInput { op: "concat" });
        }
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(self.value(p).data());
        }
        let rg = self.needs(parts);
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec()), rg))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var, AutodiffError> {
        let first = rows.first().ok_or(AutodiffError::EmptyInput { op: "stack_rows" })?;
        let width = self.value(*first).len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for &r in rows {
            let t = self.value(r);
            if t.rank() != 1 || t.len() != width {
                return Err(AutodiffError::ShapeMismatch {
                    op: "stack_rows",
                    left: vec![width],
                    right: t.shape().to_vec(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows.len(), width, data)?;
        let rg = self.needs(rows);
        Ok(self.push(out, Op::StackRows(rows.to_vec()), rg))
    }

    pub fn column(&mut self, a: Var, col: usize) -> Result<Var, AutodiffError> {
        let ta = self.value(a);
        match ta.dims2() {
            Some((_, cols)) if col < cols => {}
            _ => {
                return Err(AutodiffError::ShapeMismatch {
                    op: "column",
                    left: ta.shape().to_vec(),
                    right: vec![col],
                })
            }
        }
        let out = Tensor::vector(ta.column(col));
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Column(a, col), rg))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, AutodiffError> {
        let out = self.value(a).clone().reshaped(shape)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Reshape(a), rg))
    }

    /// Valid 1-D convolution over the first `len` columns of `input [d×S]`
    /// with `kernel [F×d×s]` and `bias [F]`, giving `[F×L]` with
    /// `L = len − s + 1`.
    ///
    /// When `len < s` a single window is produced and columns at or past
    /// `len` read as zero. Columns past `len` never contribute.
    pub fn conv1d(
        &mut self,
        input: Var,
        kernel: Var,
        bias: Var,
        len: usize,
    ) -> Result<Var, AutodiffError> {
        let (ti, tk, tb) = (self.value(input), self.value(kernel), self.value(bias));
        let (d, cols) = ti.dims2().ok_or(AutodiffError::ShapeMismatch {
            op: "conv1d",
            left: ti.shape().to_vec(),
            right: tk.shape().to_vec(),
        })?;
        let (filters, width) = match tk.shape() {
            &[f, kd, s] if kd == d => (f, s),
            _ => {
                return Err(AutodiffError::ShapeMismatch {
                    op: "conv1d",
                    left: ti.shape().to_vec(),
                    right: tk.shape().to_vec(),
                })
            }
        };
        if tb.shape() != [filters] {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv1d bias",
                left: tk.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let len = len.min(cols);
        let windows = conv_windows(len, width);
        let (x, k, b) = (ti.data(), tk.data(), tb.data());
        let mut data = vec![0.0; filters * windows];
        for f in 0..filters {
            for t in 0..windows {
                let mut acc = b[f];
                for r in 0..d {
                    let krow = &k[(f * d + r) * width..(f * d + r + 1) * width];
                    for (j, &kv) in krow.iter().enumerate() {
                        let c = t + j;
                        if c < len {
                            acc += kv * x[r * cols + c];
                        }
                    }
                }
                data[f * windows + t] = acc;
            }
        }
        let out = Tensor::matrix(filters, windows, data)?;
        let rg = self.needs(&[input, kernel, bias]);
        Ok(self.push(out, Op::Conv1d { input, kernel, bias, len }, rg))
    }

    /// Order-preserving k-max pooling applied to each row of a matrix.
    pub fn kmax_rows(&mut self, a: Var, k: usize) -> Result<Var, AutodiffError> {
        let ta = self.value(a);
        let (rows, cols) = ta.dims2().ok_or(AutodiffError::ShapeMismatch {
            op: "kmax_rows",
            left: ta.shape().to_vec(),
            right: vec![k],
        })?;
        if k == 0 {
            return Err(AutodiffError::EmptyInput { op: "kmax_rows" });
        }
        let mut picks = Vec::with_capacity(rows);
        let mut data = vec![0.0; rows * k];
        for r in 0..rows {
            let row = &ta.data()[r * cols..(r + 1) * cols];
            let idx = kmax_indices(row, k);
            for (slot, &i) in idx.iter().enumerate() {
                data[r * k + slot] = row[i];
            }
            picks.push(idx);
        }
        let out = Tensor::matrix(rows, k, data)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::KMaxRows { input: a, picks }, rg))
    }

    /// Reverse pass from a scalar `loss`, visiting nodes in exact reverse
    /// recording order.
    pub fn backward(&mut self, loss: Var) -> Result<(), AutodiffError> {
        if self.backward_done {
            return Err(AutodiffError::BackwardTwice);
        }
        if self.values[loss.0].len() != 1 {
            return Err(AutodiffError::NonScalarLoss {
                shape: self.values[loss.0].shape().to_vec(),
            });
        }
        self.backward_done = true;
        if !self.requires_grad[loss.0] {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        let Tape {
            values,
            ops,
            requires_grad,
            grads,
            ..
        } = self;
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            backprop_node(&ops[i], &values[i], &g, values, requires_grad, grads);
            grads[i] = Some(g);
        }
        Ok(())
    }

    /// Clears all gradients so `backward` may run again.
    pub fn reset(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
        self.backward_done = false;
    }

    /// Gradients of every recorded parameter, zero-filled where no gradient
    /// reached the parameter. A name recorded twice accumulates.
    pub fn param_grads(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (name, v) in &self.params {
            let len = self.values[v.0].len();
            let slot = out.entry(name.clone()).or_insert_with(|| vec![0.0; len]);
            if let Some(g) = &self.grads[v.0] {
                slot.iter_mut().zip(g).for_each(|(s, x)| *s += x);
            }
        }
        out
    }
}

fn accum<'a>(
    grads: &'a mut [Option<Vec<f64>>],
    requires_grad: &[bool],
    values: &[Tensor],
    v: Var,
) -> Option<&'a mut Vec<f64>> {
    if !requires_grad[v.0] {
        return None;
    }
    let len = values[v.0].len();
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
}

fn backprop_node(
    op: &Op,
    out: &Tensor,
    g: &[f64],
    values: &[Tensor],
    rg: &[bool],
    grads: &mut [Option<Vec<f64>>],
) {
    match op {
        Op::Leaf => {}
        Op::Elementwise(kind, a, b) => {
            let (va, vb) = (values[a.0].data(), values[b.0].data());
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    ga[i] += match kind {
                        ElementwiseKind::Add | ElementwiseKind::Sub => g[i],
                        ElementwiseKind::Mul => g[i] * vb[i],
                    };
                }
            }
            if let Some(gb) = accum(grads, rg, values, *b) {
                for i in 0..g.len() {
                    gb[i] += match kind {
                        ElementwiseKind::Add => g[i],
                        ElementwiseKind::Sub => -g[i],
                        ElementwiseKind::Mul => g[i] * va[i],
                    };
                }
            }
        }
        Op::MulConst(a, mask) => {
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    ga[i] += g[i] * mask[i];
                }
            }
        }
        Op::Scale(a, factor) => {
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    ga[i] += g[i] * factor;
                }
            }
        }
        Op::MatMul(a, b) => {
            let (m, k) = values[a.0].dims2().unwrap();
            let n = values[b.0].dims2().unwrap().1;
            let (ad, bd) = (values[a.0].data(), values[b.0].data());
            // dA = dC · Bᵀ
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..m {
                    for p in 0..k {
                        let mut s = 0.0;
                        for j in 0..n {
                            s += g[i * n + j] * bd[p * n + j];
                        }
                        ga[i * k + p] += s;
                    }
                }
            }
            // dB = Aᵀ · dC
            if let Some(gb) = accum(grads, rg, values, *b) {
                for i in 0..m {
                    for p in 0..k {
                        let aip = ad[i * k + p];
                        for j in 0..n {
                            gb[p * n + j] += aip * g[i * n + j];
                        }
                    }
                }
            }
        }
        Op::MatVec(w, x) => {
            let (m, k) = values[w.0].dims2().unwrap();
            let (wd, xd) = (values[w.0].data(), values[x.0].data());
            if let Some(gw) = accum(grads, rg, values, *w) {
                for i in 0..m {
                    if g[i] == 0.0 {
                        continue;
                    }
                    for (o, &xv) in gw[i * k..(i + 1) * k].iter_mut().zip(xd) {
                        *o += g[i] * xv;
                    }
                }
            }
            if let Some(gx) = accum(grads, rg, values, *x) {
                for i in 0..m {
                    for (o, &wv) in gx.iter_mut().zip(&wd[i * k..(i + 1) * k]) {
                        *o += g[i] * wv;
                    }
                }
            }
        }
        Op::Transpose(a) => {
            let (r, c) = values[a.0].dims2().unwrap();
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..r {
                    for j in 0..c {
                        ga[i * c + j] += g[j * r + i];
                    }
                }
            }
        }
        Op::Activation(kind, a) => {
            let (x, y) = (values[a.0].data(), out.data());
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    let d = match kind {
                        Activation::Tanh => 1.0 - y[i] * y[i],
                        Activation::Sigmoid => y[i] * (1.0 - y[i]),
                        Activation::Relu => {
                            if x[i] > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    ga[i] += g[i] * d;
                }
            }
        }
        Op::Softmax(a) => {
            let y = out.data();
            let inner: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    ga[i] += y[i] * (g[i] - inner);
                }
            }
        }
        Op::Normalize(a) => {
            let y = out.data();
            let s = values[a.0].data().iter().sum::<f64>().max(f64::MIN_POSITIVE);
            let inner: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..g.len() {
                    ga[i] += (g[i] - inner) / s;
                }
            }
        }
        Op::CrossEntropy { pred, gold, weight } => {
            let p = values[pred.0].data()[*gold];
            if let Some(gp) = accum(grads, rg, values, *pred) {
                gp[*gold] += -g[0] * weight / (p + LOG_EPSILON);
            }
        }
        Op::Sum(a) => {
            if let Some(ga) = accum(grads, rg, values, *a) {
                ga.iter_mut().for_each(|v| *v += g[0]);
            }
        }
        Op::Dot(a, b) => {
            let (va, vb) = (values[a.0].data().to_vec(), values[b.0].data().to_vec());
            if let Some(ga) = accum(grads, rg, values, *a) {
                for i in 0..ga.len() {
                    ga[i] += g[0] * vb[i];
                }
            }
            if let Some(gb) = accum(grads, rg, values, *b) {
                for i in 0..gb.len() {
                    gb[i] += g[0] * va[i];
                }
            }
        }
        Op::Concat(parts) => {
            let mut offset = 0;
            for p in parts {
                let n = values[p.0].len();
                if let Some(gp) = accum(grads, rg, values, *p) {
                    for i in 0..n {
                        gp[i] += g[offset + i];
                    }
                }
                offset += n;
            }
        }
        Op::StackRows(rows) => {
            let width = out.dims2().unwrap().1;
            for (r, p) in rows.iter().enumerate() {
                if let Some(gp) = accum(grads, rg, values, *p) {
                    for i in 0..width {
                        gp[i] += g[r * width + i];
                    }
                }
            }
        }
        Op::Column(a, col) => {
            let cols = values[a.0].dims2().unwrap().1;
            if let Some(ga) = accum(grads, rg, values, *a) {
                for (r, gv) in g.iter().enumerate() {
                    ga[r * cols + col] += gv;
                }
            }
        }
        Op::Reshape(a) => {
            if let Some(ga) = accum(grads, rg, values, *a) {
                ga.iter_mut().zip(g).for_each(|(o, v)| *o += v);
            }
        }
        Op::Conv1d {
            input,
            kernel,
            bias,
            len,
        } => {
            let (d, cols) = values[input.0].dims2().unwrap();
            let (filters, width) = match values[kernel.0].shape() {
                &[f, _, s] => (f, s),
                _ => unreachable!(),
            };
            let windows = out.dims2().unwrap().1;
            let len = *len;
            let x = values[input.0].data().to_vec();
            let k = values[kernel.0].data().to_vec();
            if let Some(gk) = accum(grads, rg, values, *kernel) {
                for f in 0..filters {
                    for t in 0..windows {
                        let gv = g[f * windows + t];
                        for r in 0..d {
                            for j in 0..width {
                                if t + j < len {
                                    gk[(f * d + r) * width + j] += gv * x[r * cols + t + j];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(gx) = accum(grads, rg, values, *input) {
                for f in 0..filters {
                    for t in 0..windows {
                        let gv = g[f * windows + t];
                        for r in 0..d {
                            for j in 0..width {
                                if t + j < len {
                                    gx[r * cols + t + j] += gv * k[(f * d + r) * width + j];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(gb) = accum(grads, rg, values, *bias) {
                for f in 0..filters {
                    gb[f] += g[f * windows..(f + 1) * windows].iter().sum::<f64>();
                }
            }
        }
        Op::KMaxRows { input, picks } => {
            let cols = values[input.0].dims2().unwrap().1;
            let k = out.dims2().unwrap().1;
            if let Some(ga) = accum(grads, rg, values, *input) {
                for (r, idx) in picks.iter().enumerate() {
                    for (slot, &i) in idx.iter().enumerate() {
                        ga[r * cols + i] += g[r * k + slot];
                    }
                }
            }
        }
    }
}

/// Number of convolution windows for a sequence of true length `len`.
pub fn conv_windows(len: usize, width: usize) -> usize {
    if len >= width {
        len - width + 1
    } else {
        1
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax.
pub fn softmax(x: &[f64]) -> Result<Vec<f64>, AutodiffError> {
    if x.is_empty() {
        return Err(AutodiffError::EmptyInput { op: "softmax" });
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Indices of the `k` largest entries, returned in ascending index order.
/// Ties go to the lower index. Fewer than `k` indices when `row.len() < k`.
pub fn kmax_indices(row: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    order
}
