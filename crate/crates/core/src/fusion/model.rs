use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{argmax, fuse, FusionError, FusionRule};
use crate::autodiff::{Params, Tensor};
use crate::channel::Channel;
use crate::cnn::{CnnChannel, CnnConfig};
use crate::embedding::EmbeddingTable;
use crate::eval::LabeledDataset;
use crate::lstm::{LstmChannel, LstmConfig};
use crate::text::{tokenize, Pipeline, PipelineReport};

/// Which channels a model contains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChannelSelection {
    Lstm,
    Cnn,
    #[default]
    Multichannel,
}

impl ChannelSelection {
    pub fn name(self) -> &'static str {
        match self {
            ChannelSelection::Lstm => "lstm",
            ChannelSelection::Cnn => "cnn",
            ChannelSelection::Multichannel => "multichannel",
        }
    }

    pub fn has_lstm(self) -> bool {
        self != ChannelSelection::Cnn
    }

    pub fn has_cnn(self) -> bool {
        self != ChannelSelection::Lstm
    }
}

impl fmt::Display for ChannelSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lstm" => Ok(Self::Lstm),
            "cnn" => Ok(Self::Cnn),
            "multichannel" => Ok(Self::Multichannel),
            _ => Err(format!("unknown channel selection `{s}`")),
        }
    }
}

/// A cleaned, embedded document ready for either channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    /// The tokens that made it into the matrix (at most `max_len`).
    pub tokens: Vec<String>,
    /// `[d × max_len]`, zero beyond `len`.
    pub matrix: Tensor,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: Prepared,
    pub label: usize,
}

/// Cleaning pipeline plus embedding table and sequence width: everything
/// that turns raw text into a sentence matrix.
#[derive(Clone, Debug)]
pub struct Featurizer {
    pipeline: Pipeline,
    table: Arc<EmbeddingTable>,
    max_len: usize,
}

pub const DEFAULT_MAX_LEN: usize = 128;

impl Featurizer {
    pub fn new(pipeline: Pipeline, table: Arc<EmbeddingTable>, max_len: usize) -> Result<Self, FusionError> {
        if max_len == 0 {
            return Err(FusionError::Config("max_len must be at least 1".into()));
        }
        Ok(Self {
            pipeline,
            table,
            max_len,
        })
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// SHA-256 over the pipeline configuration, the embedding table (with
    /// its OOV policy) and `max_len`.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.pipeline.fingerprint_material().as_bytes());
        h.update(format!("embedding\t{}\n", hex::encode(self.table.digest())).as_bytes());
        h.update(format!("max_len\t{}\n", self.max_len).as_bytes());
        h.finalize().into()
    }

    /// Embeds text that has already been cleaned.
    pub fn embed(&self, cleaned: &str) -> Result<Prepared, FusionError> {
        let mut tokens = tokenize(cleaned);
        if tokens.is_empty() {
            return Err(FusionError::EmptyDocument);
        }
        let (matrix, len) = self.table.sentence_matrix(&tokens, self.max_len);
        tokens.truncate(len);
        Ok(Prepared {
            tokens,
            matrix,
            len,
        })
    }

    /// Cleans and embeds one document.
    pub fn prepare(&self, text: &str) -> Result<Prepared, FusionError> {
        let (processed, _) = self.pipeline.process(text);
        self.embed(&processed.text)
    }

    /// Cleans and embeds a labeled dataset. Documents that end up empty are
    /// dropped and counted in the report.
    pub fn examples(
        &self,
        dataset: &LabeledDataset,
        classes: &[String],
    ) -> Result<(Vec<Example>, PipelineReport), FusionError> {
        let labels = dataset.label_indices(classes)?;
        let texts: Vec<&str> = dataset.texts().collect();
        let (processed, report) = self.pipeline.process_all(&texts);
        let mut out = Vec::with_capacity(processed.len());
        for (p, label) in processed.iter().zip(labels) {
            if p.empty {
                continue;
            }
            out.push(Example {
                input: self.embed(&p.text)?,
                label,
            });
        }
        Ok((out, report))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: String,
    pub index: usize,
    pub p_final: Vec<f64>,
    pub p_lstm: Option<Vec<f64>>,
    pub p_cnn: Option<Vec<f64>>,
}

/// Name of a fine-tuned embedding parameter for `token` in a channel.
pub(crate) fn embed_param_name(channel: &str, token: &str) -> String {
    format!("{channel}.embed.{token}")
}

/// `prepared.matrix` with columns replaced by the channel's fine-tuned
/// vectors where it has any.
pub(crate) fn channel_input<'a>(
    channel: &dyn Channel,
    prepared: &'a Prepared,
) -> Cow<'a, Tensor> {
    let params = channel.params();
    let mut out: Option<Tensor> = None;
    for (col, tok) in prepared.tokens.iter().enumerate() {
        if let Some(v) = params.get(&embed_param_name(channel.name(), tok)) {
            let m = out.get_or_insert_with(|| prepared.matrix.clone());
            for (row, x) in v.data().iter().enumerate() {
                m.set2(row, col, *x);
            }
        }
    }
    match out {
        Some(m) => Cow::Owned(m),
        None => Cow::Borrowed(&prepared.matrix),
    }
}

/// BiLSTM-attention and CNN channels over a shared class list, fused by a
/// [`FusionRule`]. Either channel may be absent, in which case the other
/// one's distribution is the final one.
#[derive(Clone, Debug)]
pub struct MultichannelModel {
    pub(crate) lstm: Option<LstmChannel>,
    pub(crate) cnn: Option<CnnChannel>,
    classes: Vec<String>,
    rule: FusionRule,
    fingerprint: [u8; 32],
}

impl MultichannelModel {
    /// Freshly initialized channels. Each channel draws from its own stream
    /// derived from `seed`, so selecting one channel does not change its
    /// initial weights.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        classes: Vec<String>,
        rule: FusionRule,
        selection: ChannelSelection,
        input_dim: usize,
        lstm: LstmConfig,
        cnn: CnnConfig,
        fingerprint: [u8; 32],
        seed: u64,
    ) -> Result<Self, FusionError> {
        let c = classes.len();
        let lstm = selection.has_lstm().then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            LstmChannel::new(input_dim, c, lstm, &mut rng)
        });
        let cnn = if selection.has_cnn() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            Some(CnnChannel::new(input_dim, c, cnn, &mut rng)?)
        } else {
            None
        };
        Self::from_parts(classes, rule, fingerprint, lstm, cnn)
    }

    pub fn from_parts(
        classes: Vec<String>,
        rule: FusionRule,
        fingerprint: [u8; 32],
        lstm: Option<LstmChannel>,
        cnn: Option<CnnChannel>,
    ) -> Result<Self, FusionError> {
        if classes.len() < 2 {
            return Err(FusionError::TooFewClasses(classes.len()));
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].contains(c) {
                return Err(FusionError::DuplicateClass(c.clone()));
            }
        }
        if lstm.is_none() && cnn.is_none() {
            return Err(FusionError::NoChannel);
        }
        let channels: [Option<&dyn Channel>; 2] = [
            lstm.as_ref().map(|c| c as &dyn Channel),
            cnn.as_ref().map(|c| c as &dyn Channel),
        ];
        let dims: Vec<usize> = channels.iter().flatten().map(|c| c.input_dim()).collect();
        for ch in channels.iter().flatten() {
            if ch.num_classes() != classes.len() {
                return Err(FusionError::Config(format!(
                    "{} head has {} outputs for {} classes",
                    ch.name(),
                    ch.num_classes(),
                    classes.len()
                )));
            }
        }
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(FusionError::Config(format!("channel input sizes differ: {dims:?}")));
        }
        Ok(Self {
            lstm,
            cnn,
            classes,
            rule,
            fingerprint,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn rule(&self) -> FusionRule {
        self.rule
    }

    pub fn set_rule(&mut self, rule: FusionRule) {
        self.rule = rule;
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn selection(&self) -> ChannelSelection {
        match (&self.lstm, &self.cnn) {
            (Some(_), None) => ChannelSelection::Lstm,
            (None, Some(_)) => ChannelSelection::Cnn,
            _ => ChannelSelection::Multichannel,
        }
    }

    pub fn lstm(&self) -> Option<&LstmChannel> {
        self.lstm.as_ref()
    }

    pub fn cnn(&self) -> Option<&CnnChannel> {
        self.cnn.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.lstm
            .as_ref()
            .map(|c| c.input_dim())
            .or(self.cnn.as_ref().map(|c| c.input_dim()))
            .expect("at least one channel")
    }

    /// All channel parameters under their full names.
    pub fn params(&self) -> Params {
        let mut p = Params::new();
        if let Some(c) = &self.lstm {
            p.extend(c.params().clone());
        }
        if let Some(c) = &self.cnn {
            p.extend(c.params().clone());
        }
        p
    }

    pub fn check_fingerprint(&self, featurizer: &Featurizer) -> Result<(), FusionError> {
        let current = featurizer.fingerprint();
        if current != self.fingerprint {
            return Err(FusionError::FingerprintMismatch {
                model: hex::encode(self.fingerprint),
                current: hex::encode(current),
            });
        }
        if featurizer.dim() != self.input_dim() {
            return Err(FusionError::Config(format!(
                "embedding dimension {} does not match model input {}",
                featurizer.dim(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Cleans, embeds and classifies one document.
    pub fn predict(&self, featurizer: &Featurizer, text: &str) -> Result<Prediction, FusionError> {
        self.check_fingerprint(featurizer)?;
        self.predict_prepared(&featurizer.prepare(text)?)
    }

    pub fn predict_prepared(&self, input: &Prepared) -> Result<Prediction, FusionError> {
        let run = |ch: &dyn Channel| -> Result<Vec<f64>, FusionError> {
            Ok(ch.probabilities(&channel_input(ch, input), input.len)?)
        };
        let p_lstm = self.lstm.as_ref().map(|c| run(c)).transpose()?;
        let p_cnn = self.cnn.as_ref().map(|c| run(c)).transpose()?;
        let p_final = match (&p_lstm, &p_cnn) {
            (Some(a), Some(b)) => fuse(a, b, self.rule)?,
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => return Err(FusionError::NoChannel),
        };
        let index = argmax(&p_final);
        Ok(Prediction {
            class: self.classes[index].clone(),
            index,
            p_final,
            p_lstm,
            p_cnn,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn small() -> (LstmConfig, CnnConfig) {
        (
            LstmConfig { hidden: 3, dropout: 0.0 },
            CnnConfig { filters: 2, k: 2, ..Default::default() },
        )
    }

    #[test]
    fn rejects_degenerate_class_lists() {
        let (l, c) = small();
        let sel = ChannelSelection::Multichannel;
        let r = MultichannelModel::new(classes(1), FusionRule::Product, sel, 4, l.clone(), c.clone(), [0; 32], 1);
        assert!(matches!(r, Err(FusionError::TooFewClasses(1))));
        let dup = vec!["a".to_string(), "a".to_string()];
        let r = MultichannelModel::new(dup, FusionRule::Product, sel, 4, l, c, [0; 32], 1);
        assert!(matches!(r, Err(FusionError::DuplicateClass(_))));
    }

    #[test]
    fn selection_controls_channels() {
        let (l, c) = small();
        for sel in [ChannelSelection::Lstm, ChannelSelection::Cnn, ChannelSelection::Multichannel] {
            let m = MultichannelModel::new(classes(3), FusionRule::Product, sel, 4, l.clone(), c.clone(), [0; 32], 1)
                .unwrap();
            assert_eq!(m.selection(), sel);
            assert_eq!(m.lstm().is_some(), sel.has_lstm());
            assert_eq!(m.cnn().is_some(), sel.has_cnn());
        }
    }

    #[test]
    fn channel_init_independent_of_selection() {
        let (l, c) = small();
        let both = MultichannelModel::new(classes(3), FusionRule::Product, ChannelSelection::Multichannel, 4, l.clone(), c.clone(), [0; 32], 7).unwrap();
        let only = MultichannelModel::new(classes(3), FusionRule::Product, ChannelSelection::Cnn, 4, l, c, [0; 32], 7).unwrap();
        assert_eq!(both.cnn().unwrap().params(), only.cnn().unwrap().params());
    }

    #[test]
    fn fine_tuned_vectors_override_columns() {
        let (l, c) = small();
        let mut m = MultichannelModel::new(classes(2), FusionRule::Product, ChannelSelection::Lstm, 2, l, c, [0; 32], 7).unwrap();
        m.lstm.as_mut().unwrap().params_mut().insert("lstm.embed.b", Tensor::vector(vec![5.0, 6.0]));
        let prepared = Prepared {
            tokens: vec!["a".into(), "b".into()],
            matrix: Tensor::matrix(2, 3, vec![1.0, 2.0, 0.0, 3.0, 4.0, 0.0]).unwrap(),
            len: 2,
        };
        let ch = m.lstm().unwrap();
        let input = channel_input(ch, &prepared);
        assert_eq!(input.data(), &[1.0, 5.0, 0.0, 3.0, 6.0, 0.0]);
    }
}
