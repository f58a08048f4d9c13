//! Pretrained word vectors in the `.vec` text format and the `d × S`
//! sentence matrices built from them.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autodiff::Tensor;
use crate::text::{char_ngrams, NGRAM_MAX, NGRAM_MIN};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header {0:?}: expected `<count> <dim>`")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} values, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {value:?} as a number")]
    BadNumber { line: usize, value: String },
    #[error("vector for {token:?} has length {found}, table dimension is {expected}")]
    Dimension {
        token: String,
        expected: usize,
        found: usize,
    },
}

/// What [`EmbeddingTable::lookup`] returns for tokens missing from the table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OovPolicy {
    Zero,
    /// Mean of the vectors of the token's character n-grams (3–6, with `<`
    /// and `>` boundary markers) that are present in the table.
    #[default]
    SubwordAverage,
}

impl OovPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OovPolicy::Zero => "zero",
            OovPolicy::SubwordAverage => "subword-average",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(OovPolicy::Zero),
            "subword-average" | "subword" => Some(OovPolicy::SubwordAverage),
            _ => None,
        }
    }
}

/// Token → vector map of fixed dimension. Read-only after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    policy: OovPolicy,
}

/// Diagnostics from reading a `.vec` file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VecLoadReport {
    pub declared: usize,
    pub rows_read: usize,
    /// (line, token) of rows that overwrote an earlier row.
    pub duplicates: Vec<(usize, String)>,
}

impl VecLoadReport {
    pub fn is_short(&self) -> bool {
        self.rows_read < self.declared
    }
}

impl EmbeddingTable {
    pub fn new(dim: usize, policy: OovPolicy) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            vectors: HashMap::new(),
            policy,
        }
    }

    pub fn from_vectors<I>(dim: usize, policy: OovPolicy, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut t = Self::new(dim, policy);
        for (token, v) in rows {
            t.insert(token, v)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, token: String, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                token,
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(token, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn policy(&self) -> OovPolicy {
        self.policy
    }

    pub fn with_policy(mut self, policy: OovPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Parses `.vec` text. At most `count` rows are read; a file with fewer
    /// rows than declared is accepted and reported.
    pub fn read_vec<R: BufRead>(
        reader: R,
        policy: OovPolicy,
    ) -> Result<(Self, VecLoadReport), EmbeddingError> {
        let io = |source| EmbeddingError::Io {
            path: "<reader>".into(),
            source,
        };
        let mut lines = reader.lines();
        let header = lines.next().transpose().map_err(io)?.unwrap_or_default();
        let header = header.trim_end_matches('\r');
        let fields: Vec<&str> = header.split_ascii_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => (c, d),
                _ => return Err(EmbeddingError::MalformedHeader(header.to_string())),
            },
            _ => return Err(EmbeddingError::MalformedHeader(header.to_string())),
        };
        let mut table = Self::new(dim, policy);
        let mut report = VecLoadReport {
            declared: count,
            ..Default::default()
        };
        for (i, line) in lines.enumerate() {
            if report.rows_read == count {
                break;
            }
            let lineno = i + 2;
            let line = line.map_err(io)?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let token = parts.next().unwrap_or_default().to_string();
            let values: Vec<&str> = parts.collect();
            if values.len() != dim {
                return Err(EmbeddingError::Arity {
                    line: lineno,
                    expected: dim,
                    found: values.len(),
                });
            }
            let mut v = Vec::with_capacity(dim);
            for s in values {
                let x: f64 = s.parse().map_err(|_| EmbeddingError::BadNumber {
                    line: lineno,
                    value: s.to_string(),
                })?;
                if !x.is_finite() {
                    return Err(EmbeddingError::BadNumber {
                        line: lineno,
                        value: s.to_string(),
                    });
                }
                v.push(x);
            }
            if table.vectors.insert(token.clone(), v).is_some() {
                log::warn!("line {lineno}: duplicate token {token:?}, keeping the later row");
                report.duplicates.push((lineno, token));
            }
            report.rows_read += 1;
        }
        if report.is_short() {
            log::warn!(
                "header declares {} vectors but only {} rows were present",
                report.declared,
                report.rows_read
            );
        }
        Ok((table, report))
    }

    pub fn load_vec_file(
        path: &Path,
        policy: OovPolicy,
    ) -> Result<(Self, VecLoadReport), EmbeddingError> {
        let file = std::fs::File::open(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_vec(BufReader::new(file), policy)
    }

    /// Writes the table in `.vec` format, tokens sorted. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_vec<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for t in tokens {
            write!(w, "{t}")?;
            for x in &self.vectors[t] {
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Vector for `token`; never fails and always has length `dim`.
    pub fn lookup(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.vectors.get(token) {
            return v.clone();
        }
        let mut out = vec![0.0; self.dim];
        if self.policy == OovPolicy::Zero {
            return out;
        }
        let mut hits = 0usize;
        for g in char_ngrams(token, NGRAM_MIN, NGRAM_MAX) {
            if let Some(v) = self.vectors.get(&g) {
                out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
                hits += 1;
            }
        }
        if hits > 0 {
            let inv = 1.0 / hits as f64;
            out.iter_mut().for_each(|o| *o *= inv);
        }
        out
    }

    /// `[d × max_len]` matrix whose column `i` is the vector of token `i`,
    /// truncated or zero-padded to `max_len`, plus the unpadded length.
    pub fn sentence_matrix(&self, tokens: &[String], max_len: usize) -> (Tensor, usize) {
        self.sentence_matrix_with(tokens, max_len, |_| None)
    }

    /// As [`sentence_matrix`](Self::sentence_matrix), but `custom` may supply
    /// a vector for a token ahead of the table (fine-tuned embeddings).
    pub fn sentence_matrix_with<'a, F>(
        &self,
        tokens: &[String],
        max_len: usize,
        custom: F,
    ) -> (Tensor, usize)
    where
        F: Fn(&str) -> Option<&'a [f64]>,
    {
        assert!(max_len >= 1, "max_len must be at least 1");
        let len = tokens.len().min(max_len);
        if len == 0 {
            log::warn!("empty document: sentence matrix is all zeros");
        }
        let mut m = Tensor::zeros(&[self.dim, max_len]);
        for (col, tok) in tokens.iter().take(len).enumerate() {
            let owned;
            let v: &[f64] = match custom(tok) {
                Some(v) => v,
                None => {
                    owned = self.lookup(tok);
                    &owned
                }
            };
            for (row, x) in v.iter().enumerate() {
                m.set2(row, col, *x);
            }
        }
        (m, len)
    }

    /// SHA-256 over the sorted table contents, dimension and OOV policy.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        h.update(self.policy.name().as_bytes());
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for t in tokens {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
            for x in &self.vectors[t] {
                h.update(x.to_le_bytes());
            }
        }
        h.finalize().into()
    }
}
