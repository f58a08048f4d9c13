//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Relative paths are
//! resolved against the directory of the config file. Unknown keys are
//! rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use domid::autodiff::OptimizerKind;
use domid::baselines::{LossKind, TfidfMode};
use domid::cnn::CnnConfig;
use domid::embedding::OovPolicy;
use domid::fusion::{ChannelSelection, FusionRule, TrainConfig};
use domid::lstm::LstmConfig;

use crate::error::CliError;

/// Every accepted key with its default (empty for unset paths) and a short
/// description. `domid config-keys` prints this table.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("train", "", "training corpus (label<TAB>text)"),
    ("val", "", "validation corpus"),
    ("test", "", "test corpus"),
    ("embeddings", "", "word vectors in .vec text format"),
    ("acronyms", "", "acronym dictionary (ACRONYM<TAB>expansion)"),
    ("translations", "", "offline translation dictionary (source<TAB>target)"),
    ("translate_url", "", "LibreTranslate-style endpoint (needs the `remote` feature)"),
    ("model", "", "model file written by train and read by eval/predict"),
    ("classes", "", "comma-separated class order; default: order of first appearance in train"),
    ("seed", "42", "seed for initialization, shuffling and dropout"),
    ("channel", "multichannel", "lstm | cnn | multichannel"),
    ("fusion", "product", "product | average | maximum | minimum | addition"),
    ("max_len", "128", "sentence matrix width S"),
    ("oov", "subword", "out-of-vocabulary policy: subword | zero"),
    ("epochs", "30", "maximum training epochs"),
    ("batch_size", "32", "documents per update"),
    ("lr", "0.001", "learning rate"),
    ("optimizer", "adam", "adam | sgd"),
    ("adam_beta1", "0.9", "first-moment decay"),
    ("adam_beta2", "0.999", "second-moment decay"),
    ("adam_eps", "1e-8", "denominator epsilon"),
    ("patience", "5", "epochs without validation gain before stopping; 0 disables"),
    ("class_weighting", "false", "weight losses by inverse class frequency"),
    ("joint", "false", "train both channels through the fused output"),
    ("fine_tune", "false", "learn embedding vectors of training tokens"),
    ("lstm_hidden", "128", "BiLSTM hidden size per direction"),
    ("lstm_dropout", "0.3", "dropout before the BiLSTM head"),
    ("cnn_kernel_sizes", "2,4,6", "convolution widths"),
    ("cnn_filters", "8", "filters per width"),
    ("cnn_k", "3", "k of k-max pooling"),
    ("cnn_dropout", "0.3", "dropout before the CNN head"),
    ("baseline_features", "word", "word | word-ngram[:MIN-MAX] | char-ngram[:MIN-MAX]"),
    ("baseline_model", "svm", "svm | logistic | mlp"),
    ("baseline_epochs", "10", "baseline training epochs"),
    ("baseline_lr", "0.1", "baseline learning rate (linear models)"),
    ("baseline_l2", "0.0001", "L2 penalty (linear models)"),
    ("mlp_hidden", "64", "MLP hidden units"),
    ("mlp_lr", "0.001", "MLP learning rate"),
    ("min_df", "1", "minimum document frequency for TF-IDF terms"),
    ("max_df", "1.0", "maximum document fraction for TF-IDF terms"),
    ("smote", "false", "oversample minority classes in TF-IDF space"),
    ("smote_k", "5", "SMOTE neighbours"),
];

const PATH_KEYS: &[&str] = &[
    "train",
    "val",
    "test",
    "embeddings",
    "acronyms",
    "translations",
    "model",
];

/// Resolved configuration: defaults, then the file, then flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
            explicit: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(content: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let value = if PATH_KEYS.contains(&key) && !value.is_empty() {
                base.join(value).display().to_string()
            } else {
                value.to_string()
            };
            cfg.set(key, &value)
                .map_err(|e| CliError::usage(format!("config line {}: {}", i + 1, e.message)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&content, path.parent().unwrap_or(Path::new("")))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                self.explicit.insert(key.to_string());
                Ok(())
            }
            None => Err(CliError::usage(format!("unknown config key `{key}`"))),
        }
    }

    /// True if the key was assigned by the file or a flag.
    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.path(key)
            .ok_or_else(|| CliError::usage(format!("`{key}` is not set (config key or argument)")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.get(key);
        v.parse()
            .map_err(|_| CliError::usage(format!("invalid value `{v}` for `{key}`")))
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(CliError::usage(format!("invalid boolean `{v}` for `{key}`"))),
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parsed("seed")
    }

    pub fn channel(&self) -> Result<ChannelSelection, CliError> {
        self.get("channel").parse().map_err(CliError::usage)
    }

    pub fn fusion(&self) -> Result<FusionRule, CliError> {
        self.get("fusion").parse().map_err(CliError::usage)
    }

    pub fn max_len(&self) -> Result<usize, CliError> {
        let n: usize = self.parsed("max_len")?;
        if n == 0 {
            return Err(CliError::usage("max_len must be at least 1"));
        }
        Ok(n)
    }

    pub fn oov(&self) -> Result<OovPolicy, CliError> {
        OovPolicy::parse(self.get("oov"))
            .ok_or_else(|| CliError::usage(format!("invalid oov policy `{}`", self.get("oov"))))
    }

    /// Explicit class order, if configured.
    pub fn classes(&self) -> Option<Vec<String>> {
        let v = self.get("classes");
        (!v.is_empty()).then(|| v.split(',').map(|c| c.trim().to_string()).collect())
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let optimizer = match self.get("optimizer") {
            "adam" => OptimizerKind::Adam {
                beta1: self.parsed("adam_beta1")?,
                beta2: self.parsed("adam_beta2")?,
                eps: self.parsed("adam_eps")?,
            },
            "sgd" => OptimizerKind::Sgd,
            v => return Err(CliError::usage(format!("invalid optimizer `{v}`"))),
        };
        Ok(TrainConfig {
            epochs: self.parsed("epochs")?,
            batch_size: self.parsed("batch_size")?,
            learning_rate: self.parsed("lr")?,
            patience: self.parsed("patience")?,
            seed: self.seed()?,
            optimizer,
            class_weighting: self.flag("class_weighting")?,
            joint: self.flag("joint")?,
            fine_tune: self.flag("fine_tune")?,
        })
    }

    pub fn lstm_config(&self) -> Result<LstmConfig, CliError> {
        Ok(LstmConfig {
            hidden: self.parsed("lstm_hidden")?,
            dropout: self.dropout("lstm_dropout")?,
        })
    }

    pub fn cnn_config(&self) -> Result<CnnConfig, CliError> {
        let sizes = self
            .get("cnn_kernel_sizes")
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::usage("cnn_kernel_sizes must be comma-separated integers"))?;
        Ok(CnnConfig {
            kernel_sizes: sizes,
            filters: self.parsed("cnn_filters")?,
            k: self.parsed("cnn_k")?,
            dropout: self.dropout("cnn_dropout")?,
        })
    }

    fn dropout(&self, key: &str) -> Result<f64, CliError> {
        let d: f64 = self.parsed(key)?;
        if !(0.0..1.0).contains(&d) {
            return Err(CliError::usage(format!("`{key}` must lie in [0, 1)")));
        }
        Ok(d)
    }

    pub fn tfidf_mode(&self) -> Result<TfidfMode, CliError> {
        self.get("baseline_features").parse().map_err(CliError::usage)
    }

    pub fn baseline_model(&self) -> Result<BaselineKind, CliError> {
        match self.get("baseline_model") {
            "mlp" => Ok(BaselineKind::Mlp),
            other => other
                .parse::<LossKind>()
                .map(BaselineKind::Linear)
                .map_err(CliError::usage),
        }
    }

    pub fn usize_of(&self, key: &str) -> Result<usize, CliError> {
        self.parsed(key)
    }

    pub fn f64_of(&self, key: &str) -> Result<f64, CliError> {
        self.parsed(key)
    }

    pub fn bool_of(&self, key: &str) -> Result<bool, CliError> {
        self.flag(key)
    }

    /// Every key in sorted order, as `key=value` lines.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    Linear(LossKind),
    Mlp,
}
