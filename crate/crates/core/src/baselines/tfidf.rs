use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use super::{BaselineError, SparseVector};
use crate::text::{char_ngrams, tokenize};

/// Which terms a document contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TfidfMode {
    /// Whitespace tokens.
    Word,
    /// Space-joined runs of `min..=max` consecutive tokens.
    WordNgram { min: usize, max: usize },
    /// Character n-grams of each token wrapped in `<` and `>`.
    CharNgram { min: usize, max: usize },
}

impl TfidfMode {
    pub const DEFAULT_WORD_NGRAM: TfidfMode = TfidfMode::WordNgram { min: 1, max: 2 };
    pub const DEFAULT_CHAR_NGRAM: TfidfMode = TfidfMode::CharNgram { min: 2, max: 5 };

    /// Terms of `text` in order of occurrence, with repeats.
    pub fn terms(self, text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        match self {
            TfidfMode::Word => tokens,
            TfidfMode::WordNgram { min, max } => {
                let mut out = Vec::new();
                for n in min..=max {
                    if n == 0 || n > tokens.len() {
                        continue;
                    }
                    out.extend(tokens.windows(n).map(|w| w.join(" ")));
                }
                out
            }
            TfidfMode::CharNgram { min, max } => tokens
                .iter()
                .flat_map(|t| char_ngrams(t, min, max))
                .collect(),
        }
    }

    fn validate(self) -> Result<(), BaselineError> {
        match self {
            TfidfMode::Word => Ok(()),
            TfidfMode::WordNgram { min, max } | TfidfMode::CharNgram { min, max } => {
                if min == 0 || min > max {
                    Err(BaselineError::Config(format!("bad n-gram range {min}..={max}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for TfidfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TfidfMode::Word => write!(f, "word"),
            TfidfMode::WordNgram { min, max } => write!(f, "word-ngram:{min}-{max}"),
            TfidfMode::CharNgram { min, max } => write!(f, "char-ngram:{min}-{max}"),
        }
    }
}

/// Parses `word`, `word-ngram`, `char-ngram`, optionally followed by
/// `:MIN-MAX`.
impl FromStr for TfidfMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, range) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        let parse_range = |default: (usize, usize)| -> Result<(usize, usize), String> {
            let Some(r) = range else { return Ok(default) };
            let (a, b) = r.split_once('-').ok_or_else(|| format!("bad range `{r}`"))?;
            let a = a.parse().map_err(|_| format!("bad range `{r}`"))?;
            let b = b.parse().map_err(|_| format!("bad range `{r}`"))?;
            Ok((a, b))
        };
        match kind {
            "word" if range.is_none() => Ok(TfidfMode::Word),
            "word-ngram" => {
                let (min, max) = parse_range((1, 2))?;
                Ok(TfidfMode::WordNgram { min, max })
            }
            "char-ngram" => {
                let (min, max) = parse_range((2, 5))?;
                Ok(TfidfMode::CharNgram { min, max })
            }
            _ => Err(format!("unknown TF-IDF mode `{s}`")),
        }
    }
}

/// TF-IDF featurizer with `idf(t) = ln((1 + N) / (1 + df(t))) + 1` and raw
/// term counts as tf. Transformed vectors are L2-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct TfidfVectorizer {
    mode: TfidfMode,
    /// Minimum document count for a term to enter the vocabulary.
    pub min_df: usize,
    /// Maximum fraction of documents a term may appear in.
    pub max_df: f64,
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    documents: usize,
}

impl TfidfVectorizer {
    pub fn new(mode: TfidfMode) -> Self {
        Self {
            mode,
            min_df: 1,
            max_df: 1.0,
            vocabulary: BTreeMap::new(),
            idf: Vec::new(),
            documents: 0,
        }
    }

    pub fn mode(&self) -> TfidfMode {
        self.mode
    }

    pub fn is_fitted(&self) -> bool {
        self.documents > 0
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    /// Learns the vocabulary (sorted, so columns are reproducible) and
    /// document frequencies.
    pub fn fit<S: AsRef<str>>(&mut self, corpus: &[S]) -> Result<(), BaselineError> {
        self.mode.validate()?;
        if corpus.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        let n = corpus.len();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let unique: BTreeSet<String> = self.mode.terms(doc.as_ref()).into_iter().collect();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let cap = self.max_df * n as f64;
        df.retain(|_, &mut d| d >= self.min_df && d as f64 <= cap);
        self.vocabulary = df.keys().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        self.idf = df
            .values()
            .map(|&d| ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        self.documents = n;
        Ok(())
    }

    pub fn transform(&self, doc: &str) -> Result<SparseVector, BaselineError> {
        if !self.is_fitted() {
            return Err(BaselineError::NotFitted);
        }
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in self.mode.terms(doc) {
            if let Some(&i) = self.vocabulary.get(&t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i]))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            entries.iter_mut().for_each(|e| e.1 /= norm);
        }
        Ok(SparseVector::new(self.dim(), entries))
    }

    pub fn fit_transform<S: AsRef<str>>(&mut self, corpus: &[S]) -> Result<Vec<SparseVector>, BaselineError> {
        self.fit(corpus)?;
        corpus.iter().map(|d| self.transform(d.as_ref())).collect()
    }
}
