use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{channel_input, embed_param_name, Example, MultichannelModel};
use super::{argmax, FusionError};
use crate::autodiff::{accumulate_grads, Optimizer, OptimizerKind, Params, Tape, Tensor};
use crate::channel::Channel;
use crate::eval::evaluate_indices;

type Grads = BTreeMap<String, Vec<f64>>;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs without validation improvement before a channel stops;
    /// 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Weight each document's loss by `N / (C · count(class))`.
    pub class_weighting: bool,
    /// Train both channels together through the fused distribution instead
    /// of each on its own loss.
    pub joint: bool,
    /// Learn per-token embedding vectors for tokens seen in training.
    pub fine_tune: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            patience: 5,
            seed: 42,
            optimizer: OptimizerKind::adam(),
            class_weighting: false,
            joint: false,
            fine_tune: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.batch_size == 0 {
            return Err(FusionError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FusionError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean (weighted) cross-entropy over the epoch's training documents.
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
    pub val_f1: Option<f64>,
}

/// Per-epoch records for each trained unit, plus the epoch whose parameters
/// were kept.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub lstm: Vec<EpochRecord>,
    pub cnn: Vec<EpochRecord>,
    pub joint: Vec<EpochRecord>,
    pub best_lstm: Option<usize>,
    pub best_cnn: Option<usize>,
    pub best_joint: Option<usize>,
}

impl History {
    pub fn is_empty(&self) -> bool {
        self.lstm.is_empty() && self.cnn.is_empty() && self.joint.is_empty()
    }

    /// Tab-separated table, one row per unit and epoch.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("unit\tepoch\ttrain_loss\tval_accuracy\tval_weighted_f1\tkept\n");
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        for (unit, records, best) in [
            ("lstm", &self.lstm, self.best_lstm),
            ("cnn", &self.cnn, self.best_cnn),
            ("joint", &self.joint, self.best_joint),
        ] {
            for r in records {
                let _ = writeln!(
                    out,
                    "{unit}\t{}\t{:.6}\t{}\t{}\t{}",
                    r.epoch,
                    r.train_loss,
                    opt(r.val_accuracy),
                    opt(r.val_f1),
                    u8::from(best == Some(r.epoch))
                );
            }
        }
        out
    }
}

/// SplitMix64 over the parts, for deriving independent RNG seeds.
fn mix(parts: &[u64]) -> u64 {
    let mut z: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z ^= p;
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn class_weights(train: &[Example], classes: usize, enabled: bool) -> Vec<f64> {
    if !enabled {
        return vec![1.0; classes];
    }
    let mut counts = vec![0usize; classes];
    for ex in train {
        counts[ex.label] += 1;
    }
    counts
        .iter()
        .map(|&n| {
            if n == 0 {
                0.0
            } else {
                train.len() as f64 / (classes * n) as f64
            }
        })
        .collect()
}

/// Seeds each channel's per-token vectors from the table lookups already in
/// the training matrices.
fn init_fine_tuning(ch: &mut dyn Channel, train: &[Example]) {
    let name = ch.name();
    for ex in train {
        for (col, tok) in ex.input.tokens.iter().enumerate() {
            let key = embed_param_name(name, tok);
            if !ch.params().contains(&key) {
                let v = ex.input.matrix.column(col);
                ch.params_mut().insert(key, Tensor::vector(v));
            }
        }
    }
}

/// Records one channel's forward pass on `tape` and returns the
/// probabilities plus the input node when it carries gradients.
fn record_channel(
    tape: &mut Tape,
    ch: &dyn Channel,
    ex: &Example,
    fine_tune: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(crate::autodiff::Var, Option<crate::autodiff::Var>), FusionError> {
    let matrix = channel_input(ch, &ex.input).into_owned();
    let input = if fine_tune {
        tape.leaf(matrix, true)
    } else {
        tape.constant(matrix)
    };
    let p = ch.forward(tape, input, ex.input.len, Some(rng))?;
    Ok((p, fine_tune.then_some(input)))
}

/// Adds the input-matrix gradient columns to the matching token vectors.
fn scatter_input_grad(tape: &Tape, input: crate::autodiff::Var, ch: &dyn Channel, ex: &Example, grads: &mut Grads) {
    let Some(g) = tape.grad(input) else { return };
    let (rows, cols) = tape.value(input).dims2().expect("sentence matrix");
    for (col, tok) in ex.input.tokens.iter().enumerate() {
        let entry = grads
            .entry(embed_param_name(ch.name(), tok))
            .or_insert_with(|| vec![0.0; rows]);
        for (r, e) in entry.iter_mut().enumerate() {
            *e += g[r * cols + col];
        }
    }
}

fn channel_doc(
    ch: &dyn Channel,
    ex: &Example,
    weight: f64,
    fine_tune: bool,
    seed: u64,
) -> Result<(f64, Grads), FusionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tape = Tape::new();
    let (p, input) = record_channel(&mut tape, ch, ex, fine_tune, &mut rng)?;
    let loss = tape.cross_entropy(p, ex.label, weight)?;
    tape.backward(loss)?;
    let mut grads = tape.param_grads();
    if let Some(input) = input {
        scatter_input_grad(&tape, input, ch, ex, &mut grads);
    }
    Ok((tape.value(loss).data()[0], grads))
}

fn joint_doc(
    lstm: &dyn Channel,
    cnn: &dyn Channel,
    ex: &Example,
    weight: f64,
    fine_tune: bool,
    seed: u64,
) -> Result<(f64, Grads), FusionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tape = Tape::new();
    let (pl, il) = record_channel(&mut tape, lstm, ex, fine_tune, &mut rng)?;
    let (pc, ic) = record_channel(&mut tape, cnn, ex, fine_tune, &mut rng)?;
    let prod = tape.mul(pl, pc)?;
    let fused = tape.normalize(prod);
    let loss = tape.cross_entropy(fused, ex.label, weight)?;
    tape.backward(loss)?;
    let mut grads = tape.param_grads();
    if let (Some(il), Some(ic)) = (il, ic) {
        scatter_input_grad(&tape, il, lstm, ex, &mut grads);
        scatter_input_grad(&tape, ic, cnn, ex, &mut grads);
    }
    Ok((tape.value(loss).data()[0], grads))
}

/// Runs `doc` over a batch in parallel and sums the results in batch order,
/// so the outcome does not depend on thread scheduling.
fn batch_mean<F>(batch: &[usize], doc: F) -> Result<(f64, Grads), FusionError>
where
    F: Fn(usize) -> Result<(f64, Grads), FusionError> + Sync,
{
    let results: Vec<_> = batch.par_iter().map(|&i| doc(i)).collect();
    let mut loss = 0.0;
    let mut total = Grads::new();
    for r in results {
        let (l, g) = r?;
        loss += l;
        accumulate_grads(&mut total, &g);
    }
    let scale = 1.0 / batch.len() as f64;
    for g in total.values_mut() {
        g.iter_mut().for_each(|x| *x *= scale);
    }
    Ok((loss, total))
}

fn val_scores(
    gold: &[usize],
    predicted: &[usize],
    classes: &[String],
) -> Result<(Option<f64>, Option<f64>), FusionError> {
    if gold.is_empty() {
        return Ok((None, None));
    }
    let r = evaluate_indices(gold, predicted, classes)?;
    Ok((Some(r.accuracy), Some(r.weighted.f1)))
}

/// Tracks the best validation epoch and decides when to stop.
struct Selector {
    patience: usize,
    best: Option<(f64, usize, Vec<Params>)>,
    since_best: usize,
}

impl Selector {
    fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            since_best: 0,
        }
    }

    /// Returns true when training should stop.
    fn observe(&mut self, epoch: usize, f1: Option<f64>, snapshot: impl FnOnce() -> Vec<Params>) -> bool {
        let Some(f1) = f1 else { return false };
        if self.best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
            self.best = Some((f1, epoch, snapshot()));
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.patience > 0 && self.since_best >= self.patience
    }
}

fn epoch_order(n: usize, seed: u64, unit: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(&[seed, unit, epoch as u64])));
    order
}

const LSTM_UNIT: u64 = 1;
const CNN_UNIT: u64 = 2;
const JOINT_UNIT: u64 = 3;

struct Context<'a> {
    train: &'a [Example],
    val: &'a [Example],
    classes: &'a [String],
    weights: Vec<f64>,
    cfg: &'a TrainConfig,
}

fn train_channel(
    ch: &mut dyn Channel,
    unit: u64,
    ctx: &Context<'_>,
) -> Result<(Vec<EpochRecord>, Option<usize>), FusionError> {
    let cfg = ctx.cfg;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate)?;
    let mut selector = Selector::new(cfg.patience);
    let mut records = Vec::new();
    let gold: Vec<usize> = ctx.val.iter().map(|e| e.label).collect();
    for epoch in 1..=cfg.epochs {
        let mut loss_sum = 0.0;
        for batch in epoch_order(ctx.train.len(), cfg.seed, unit, epoch).chunks(cfg.batch_size) {
            let shared: &dyn Channel = ch;
            let (loss, grads) = batch_mean(batch, |i| {
                let ex = &ctx.train[i];
                let seed = mix(&[cfg.seed, unit, epoch as u64, i as u64]);
                channel_doc(shared, ex, ctx.weights[ex.label], cfg.fine_tune, seed)
            })?;
            loss_sum += loss;
            opt.step(ch.params_mut(), &grads)?;
        }
        let shared: &dyn Channel = ch;
        let predicted = ctx
            .val
            .par_iter()
            .map(|ex| {
                let p = shared.probabilities(&channel_input(shared, &ex.input), ex.input.len)?;
                Ok(argmax(&p))
            })
            .collect::<Result<Vec<_>, FusionError>>()?;
        let (val_accuracy, val_f1) = val_scores(&gold, &predicted, ctx.classes)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / ctx.train.len() as f64,
            val_accuracy,
            val_f1,
        };
        log::info!(
            "{} epoch {epoch}: loss {:.4} val_acc {:?} val_f1 {:?}",
            ch.name(),
            record.train_loss,
            val_accuracy,
            val_f1
        );
        records.push(record);
        if selector.observe(epoch, val_f1, || vec![ch.params().clone()]) {
            log::info!("{}: no improvement for {} epochs, stopping", ch.name(), cfg.patience);
            break;
        }
    }
    let best = match selector.best {
        Some((_, epoch, mut snapshot)) => {
            *ch.params_mut() = snapshot.remove(0);
            Some(epoch)
        }
        None => records.last().map(|r| r.epoch),
    };
    Ok((records, best))
}

fn split_grads(grads: Grads) -> (Grads, Grads) {
    grads.into_iter().partition(|(name, _)| name.starts_with("lstm."))
}

fn train_joint(
    model: &mut MultichannelModel,
    ctx: &Context<'_>,
) -> Result<(Vec<EpochRecord>, Option<usize>), FusionError> {
    let cfg = ctx.cfg;
    let mut opt_lstm = Optimizer::new(cfg.optimizer, cfg.learning_rate)?;
    let mut opt_cnn = Optimizer::new(cfg.optimizer, cfg.learning_rate)?;
    let mut selector = Selector::new(cfg.patience);
    let mut records = Vec::new();
    let gold: Vec<usize> = ctx.val.iter().map(|e| e.label).collect();
    for epoch in 1..=cfg.epochs {
        let mut loss_sum = 0.0;
        for batch in epoch_order(ctx.train.len(), cfg.seed, JOINT_UNIT, epoch).chunks(cfg.batch_size) {
            let (lstm, cnn) = match (&model.lstm, &model.cnn) {
                (Some(l), Some(c)) => (l as &dyn Channel, c as &dyn Channel),
                _ => unreachable!("checked by caller"),
            };
            let (loss, grads) = batch_mean(batch, |i| {
                let ex = &ctx.train[i];
                let seed = mix(&[cfg.seed, JOINT_UNIT, epoch as u64, i as u64]);
                joint_doc(lstm, cnn, ex, ctx.weights[ex.label], cfg.fine_tune, seed)
            })?;
            loss_sum += loss;
            let (gl, gc) = split_grads(grads);
            opt_lstm.step(model.lstm.as_mut().expect("joint").params_mut(), &gl)?;
            opt_cnn.step(model.cnn.as_mut().expect("joint").params_mut(), &gc)?;
        }
        let shared: &MultichannelModel = model;
        let predicted = ctx
            .val
            .par_iter()
            .map(|ex| Ok(shared.predict_prepared(&ex.input)?.index))
            .collect::<Result<Vec<_>, FusionError>>()?;
        let (val_accuracy, val_f1) = val_scores(&gold, &predicted, ctx.classes)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / ctx.train.len() as f64,
            val_accuracy,
            val_f1,
        };
        log::info!(
            "joint epoch {epoch}: loss {:.4} val_acc {:?} val_f1 {:?}",
            record.train_loss,
            val_accuracy,
            val_f1
        );
        records.push(record);
        let snapshot = || {
            vec![
                model.lstm.as_ref().expect("joint").params().clone(),
                model.cnn.as_ref().expect("joint").params().clone(),
            ]
        };
        if selector.observe(epoch, val_f1, snapshot) {
            log::info!("joint: no improvement for {} epochs, stopping", cfg.patience);
            break;
        }
    }
    let best = match selector.best {
        Some((_, epoch, mut snapshot)) => {
            let cnn = snapshot.pop().expect("two snapshots");
            let lstm = snapshot.pop().expect("two snapshots");
            *model.lstm.as_mut().expect("joint").params_mut() = lstm;
            *model.cnn.as_mut().expect("joint").params_mut() = cnn;
            Some(epoch)
        }
        None => records.last().map(|r| r.epoch),
    };
    Ok((records, best))
}

/// Trains the model's channels. By default each channel is optimized on its
/// own cross-entropy and keeps the parameters of its best validation epoch
/// (weighted F1). With `joint`, both channels are optimized through the
/// renormalized product of their distributions.
///
/// Results are reproducible for a fixed seed: shuffling and dropout masks
/// derive from the seed, and per-document gradients are summed in a fixed
/// order regardless of thread count.
pub fn train(
    model: &mut MultichannelModel,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
) -> Result<History, FusionError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(FusionError::EmptyTrainingSet);
    }
    if cfg.patience > 0 && val.is_empty() {
        return Err(FusionError::EmptyValidation);
    }
    let classes = model.classes().to_vec();
    for ex in train.iter().chain(val) {
        if ex.label >= classes.len() {
            return Err(FusionError::Config(format!(
                "label index {} outside {} classes",
                ex.label,
                classes.len()
            )));
        }
        if ex.input.matrix.dims2().map(|d| d.0) != Some(model.input_dim()) {
            return Err(FusionError::Config(format!(
                "example matrix has shape {:?}, model expects {} rows",
                ex.input.matrix.shape(),
                model.input_dim()
            )));
        }
    }
    if cfg.joint && model.selection() != super::ChannelSelection::Multichannel {
        return Err(FusionError::Config("joint training needs both channels".into()));
    }
    let mut history = History::default();
    if cfg.epochs == 0 {
        return Ok(history);
    }
    if cfg.fine_tune {
        if let Some(c) = model.lstm.as_mut() {
            init_fine_tuning(c, train);
        }
        if let Some(c) = model.cnn.as_mut() {
            init_fine_tuning(c, train);
        }
    }
    let ctx = Context {
        train,
        val,
        classes: &classes,
        weights: class_weights(train, classes.len(), cfg.class_weighting),
        cfg,
    };
    if cfg.joint {
        let (records, best) = train_joint(model, &ctx)?;
        history.joint = records;
        history.best_joint = best;
        return Ok(history);
    }
    if let Some(c) = model.lstm.as_mut() {
        let (records, best) = train_channel(c, LSTM_UNIT, &ctx)?;
        history.lstm = records;
        history.best_lstm = best;
    }
    if let Some(c) = model.cnn.as_mut() {
        let (records, best) = train_channel(c, CNN_UNIT, &ctx)?;
        history.cnn = records;
        history.best_cnn = best;
    }
    Ok(history)
}
