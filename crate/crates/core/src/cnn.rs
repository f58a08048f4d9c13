//! Multi-width 1-D convolution channel with order-preserving k-max pooling.
//!
//! For every kernel width `s` a bank of `F` filters (`[F × d × s]` plus a
//! bias) slides over the true-length prefix of the sentence matrix, followed
//! by ReLU. Each filter's feature map keeps its `k` largest activations in
//! their original order. The pooled rows of all banks are concatenated
//! (`widths × F × k` values) and fed to a dense softmax head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{conv_windows, kmax_indices, Params, Tape, Tensor, Var};
use crate::channel::{
    check_len, dense_head, dense_softmax, dropout, expect_shape, param_dims2, uniform, xavier,
    Channel, ModelError,
};

pub const DEFAULT_KERNEL_SIZES: [usize; 3] = [2, 4, 6];

#[derive(Clone, Debug, PartialEq)]
pub struct CnnConfig {
    pub kernel_sizes: Vec<usize>,
    pub filters: usize,
    pub k: usize,
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            kernel_sizes: DEFAULT_KERNEL_SIZES.to_vec(),
            filters: 8,
            k: 3,
            dropout: 0.3,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let sorted = self.kernel_sizes.windows(2).all(|w| w[0] < w[1]);
        if self.kernel_sizes.is_empty() || !sorted || self.kernel_sizes[0] == 0 {
            return Err(ModelError::Config(format!(
                "kernel sizes must be positive and strictly increasing, got {:?}",
                self.kernel_sizes
            )));
        }
        if self.filters == 0 || self.k == 0 {
            return Err(ModelError::Config("filters and k must be at least 1".into()));
        }
        Ok(())
    }

    /// Length of the concatenated pooled feature vector.
    pub fn feature_len(&self) -> usize {
        self.kernel_sizes.len() * self.filters * self.k
    }
}

/// Filters for each kernel width, all with the same filter count.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvFilterBank {
    pub sizes: Vec<usize>,
    /// `[F × d × s]` per size.
    pub kernels: Vec<Tensor>,
    /// `[F]` per size.
    pub biases: Vec<Tensor>,
}

impl ConvFilterBank {
    pub fn from_params(params: &Params) -> Result<Self, ModelError> {
        let sizes = kernel_sizes_in(params);
        let mut kernels = Vec::new();
        let mut biases = Vec::new();
        for s in &sizes {
            kernels.push(params.require(&format!("cnn.conv{s}.w"))?.clone());
            biases.push(params.require(&format!("cnn.conv{s}.b"))?.clone());
        }
        Ok(Self {
            sizes,
            kernels,
            biases,
        })
    }

    pub fn insert_into(&self, params: &mut Params) {
        for ((s, k), b) in self.sizes.iter().zip(&self.kernels).zip(&self.biases) {
            params.insert(format!("cnn.conv{s}.w"), k.clone());
            params.insert(format!("cnn.conv{s}.b"), b.clone());
        }
    }
}

fn kernel_sizes_in(params: &Params) -> Vec<usize> {
    let mut sizes: Vec<usize> = params
        .names()
        .filter_map(|n| n.strip_prefix("cnn.conv")?.strip_suffix(".w")?.parse().ok())
        .collect();
    sizes.sort_unstable();
    sizes
}

/// Feature maps for each kernel width.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvOutput {
    /// Pre-ReLU maps, `[F × L]` with `L = n − s + 1` (or 1 when `n < s`).
    pub pre_activation: Vec<Tensor>,
    /// Post-ReLU maps.
    pub maps: Vec<Tensor>,
    /// Widths that exceeded the sequence length and fell back to a single
    /// zero-padded window.
    pub degenerate: Vec<usize>,
}

/// Valid convolution of every bank over the first `len` columns of `matrix`.
pub fn conv1d(bank: &ConvFilterBank, matrix: &Tensor, len: usize) -> Result<ConvOutput, ModelError> {
    check_len(matrix, len)?;
    let mut tape = Tape::new();
    let input = tape.constant(matrix.clone());
    let mut out = ConvOutput {
        pre_activation: Vec::new(),
        maps: Vec::new(),
        degenerate: Vec::new(),
    };
    for ((&s, k), b) in bank.sizes.iter().zip(&bank.kernels).zip(&bank.biases) {
        if len < s {
            log::warn!("sequence length {len} shorter than kernel width {s}; using one padded window");
            out.degenerate.push(s);
        }
        let kv = tape.constant(k.clone());
        let bv = tape.constant(b.clone());
        let pre = tape.conv1d(input, kv, bv, len)?;
        let post = tape.relu(pre);
        out.pre_activation.push(tape.value(pre).clone());
        out.maps.push(tape.value(post).clone());
    }
    Ok(out)
}

/// The `k` largest values of `row` in their original order (ties to the
/// lower index), zero-padded at the end when `row` is shorter than `k`.
pub fn kmax_pool(row: &[f64], k: usize) -> Vec<f64> {
    let mut out: Vec<f64> = kmax_indices(row, k).into_iter().map(|i| row[i]).collect();
    out.resize(k, 0.0);
    out
}

/// `softmax(W·features + b)`.
pub fn channel_head(features: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>, ModelError> {
    dense_head(features, w, b)
}

/// Parameters are stored under `cnn.conv{s}.w`, `cnn.conv{s}.b` and
/// `cnn.head.*`.
#[derive(Clone, Debug)]
pub struct CnnChannel {
    config: CnnConfig,
    input_dim: usize,
    classes: usize,
    params: Params,
}

pub const CNN_PREFIX: &str = "cnn";

impl CnnChannel {
    pub fn new(
        input_dim: usize,
        classes: usize,
        config: CnnConfig,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = Params::new();
        for &s in &config.kernel_sizes {
            let fan_in = input_dim * s;
            params.insert(
                format!("cnn.conv{s}.w"),
                uniform(rng, &[config.filters, input_dim, s], xavier(fan_in, config.filters)),
            );
            params.insert(format!("cnn.conv{s}.b"), Tensor::zeros(&[config.filters]));
        }
        let feat = config.feature_len();
        params.insert("cnn.head.w", uniform(rng, &[classes, feat], xavier(feat, classes)));
        params.insert("cnn.head.b", Tensor::zeros(&[classes]));
        Ok(Self {
            config,
            input_dim,
            classes,
            params,
        })
    }

    /// Rebuilds a channel from stored parameters; widths, filter count and
    /// `k` are recovered from names and shapes.
    pub fn from_params(params: Params, dropout: f64) -> Result<Self, ModelError> {
        let sizes = kernel_sizes_in(&params);
        let first = *sizes
            .first()
            .ok_or_else(|| ModelError::MissingParam("cnn.conv*.w".into()))?;
        let shape = params.require(&format!("cnn.conv{first}.w"))?.shape().to_vec();
        let (filters, input_dim) = match shape.as_slice() {
            &[f, d, _] => (f, d),
            _ => {
                return Err(ModelError::ParamShape {
                    name: format!("cnn.conv{first}.w"),
                    expected: vec![0, 0, first],
                    found: shape,
                })
            }
        };
        for &s in &sizes {
            expect_shape(&params, &format!("cnn.conv{s}.w"), &[filters, input_dim, s])?;
            expect_shape(&params, &format!("cnn.conv{s}.b"), &[filters])?;
        }
        let (classes, feat) = param_dims2(&params, "cnn.head.w")?;
        let per_k = sizes.len() * filters;
        if feat % per_k != 0 || feat == 0 {
            return Err(ModelError::Config(format!(
                "head input {feat} is not a multiple of widths×filters {per_k}"
            )));
        }
        expect_shape(&params, "cnn.head.b", &[classes])?;
        let config = CnnConfig {
            kernel_sizes: sizes,
            filters,
            k: feat / per_k,
            dropout,
        };
        config.validate()?;
        Ok(Self {
            config,
            input_dim,
            classes,
            params,
        })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn filter_bank(&self) -> Result<ConvFilterBank, ModelError> {
        ConvFilterBank::from_params(&self.params)
    }

    /// Records the convolution and pooling stages, returning the
    /// concatenated pooled features.
    pub fn features(&self, tape: &mut Tape, input: Var, len: usize) -> Result<Var, ModelError> {
        check_len(tape.value(input), len)?;
        let mut pooled = Vec::with_capacity(self.config.kernel_sizes.len());
        for &s in &self.config.kernel_sizes {
            let wn = format!("cnn.conv{s}.w");
            let bn = format!("cnn.conv{s}.b");
            let w = tape.param(&wn, self.params.require(&wn)?);
            let b = tape.param(&bn, self.params.require(&bn)?);
            let map = tape.conv1d(input, w, b, len)?;
            debug_assert_eq!(tape.value(map).dims2().unwrap().1, conv_windows(len, s));
            let map = tape.relu(map);
            pooled.push(tape.kmax_rows(map, self.config.k)?);
        }
        Ok(tape.concat(&pooled)?)
    }
}

impl Channel for CnnChannel {
    fn name(&self) -> &'static str {
        CNN_PREFIX
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
        let feats = self.features(tape, input, len)?;
        let feats = dropout(tape, feats, self.config.dropout, rng)?;
        dense_softmax(tape, &self.params, "cnn.head", feats)
    }
}
