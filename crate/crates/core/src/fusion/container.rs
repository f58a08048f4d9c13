//! Binary model container. All integers and floats are little-endian:
//!
//! ```text
//! "DOMID"                      5 bytes
//! version                      u16
//! class count                  u32, then per class: u32 length + UTF-8
//! fusion rule id               u8
//! preprocessing fingerprint    32 bytes
//! parameter count              u32, then per parameter:
//!     u32 name length + UTF-8 name
//!     u32 rank, rank × u64 extents
//!     f64 values in row-major order
//! ```

use std::path::Path;

use super::model::MultichannelModel;
use super::{FusionError, FusionRule};
use crate::autodiff::{Params, Tensor};
use crate::cnn::CnnChannel;
use crate::lstm::LstmChannel;

pub const MAGIC: &[u8; 5] = b"DOMID";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported format version {found}; this build reads version {expected}")]
    UnsupportedVersion { found: u16, expected: u16 },
    #[error("model file truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid UTF-8 in {what}")]
    Utf8 { what: &'static str },
    #[error("unknown fusion rule id {0}")]
    UnknownFusionRule(u8),
    #[error("parameter `{name}`: {reason}")]
    Shape { name: String, reason: String },
    #[error("{0} unexpected bytes after the parameter directory")]
    TrailingBytes(usize),
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&u32::try_from(n).expect("fits in u32").to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

/// Serializes a model. The output depends only on the model contents.
pub fn write_model(model: &MultichannelModel) -> Vec<u8> {
    let params = model.params();
    let mut out = Vec::with_capacity(64 + 8 * params.num_values());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, model.classes().len());
    for c in model.classes() {
        put_str(&mut out, c);
    }
    out.push(model.rule().id());
    out.extend_from_slice(model.fingerprint());
    put_u32(&mut out, params.len());
    for (name, t) in params.iter() {
        put_str(&mut out, name);
        put_u32(&mut out, t.rank());
        for &e in t.shape() {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let rest = self.bytes.len() - self.pos;
        if n > rest {
            return Err(ContainerError::Truncated {
                offset: self.pos,
                needed: n - rest,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ContainerError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<usize, ContainerError> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }

    fn string(&mut self, what: &'static str) -> Result<String, ContainerError> {
        let n = self.u32()?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| ContainerError::Utf8 { what })
    }
}

/// Parses a model. Each structural problem maps to its own error.
pub fn read_model(bytes: &[u8]) -> Result<MultichannelModel, FusionError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::BadMagic.into());
    }
    r.take(MAGIC.len())?;
    let version = u16::from_le_bytes(r.array()?);
    if version != FORMAT_VERSION {
        return Err(ContainerError::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        }
        .into());
    }
    let n_classes = r.u32()?;
    let mut classes = Vec::with_capacity(n_classes.min(1024));
    for _ in 0..n_classes {
        classes.push(r.string("class name")?);
    }
    let rule_id = r.array::<1>()?[0];
    let rule = FusionRule::from_id(rule_id).ok_or(ContainerError::UnknownFusionRule(rule_id))?;
    let fingerprint: [u8; 32] = r.array()?;

    let n_params = r.u32()?;
    let mut params = Params::new();
    for _ in 0..n_params {
        let name = r.string("parameter name")?;
        let rank = r.u32()?;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            let e = u64::from_le_bytes(r.array()?);
            shape.push(usize::try_from(e).map_err(|_| ContainerError::Shape {
                name: name.clone(),
                reason: format!("extent {e} too large"),
            })?);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .filter(|&c| c.checked_mul(8).is_some())
            .ok_or_else(|| ContainerError::Shape {
                name: name.clone(),
                reason: format!("extents {shape:?} overflow"),
            })?;
        let raw = r.take(count * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| ContainerError::Shape {
            name: name.clone(),
            reason: e.to_string(),
        })?;
        params.insert(name, t);
    }
    let rest = bytes.len() - r.pos;
    if rest > 0 {
        return Err(ContainerError::TrailingBytes(rest).into());
    }

    let lstm_params = params.with_prefix("lstm.");
    let cnn_params = params.with_prefix("cnn.");
    if lstm_params.len() + cnn_params.len() != params.len() {
        let stray = params
            .names()
            .find(|n| !n.starts_with("lstm.") && !n.starts_with("cnn."))
            .cloned()
            .unwrap_or_default();
        return Err(ContainerError::Shape {
            name: stray,
            reason: "belongs to no channel".into(),
        }
        .into());
    }
    let lstm = (!lstm_params.is_empty())
        .then(|| LstmChannel::from_params(lstm_params, 0.0))
        .transpose()?;
    let cnn = (!cnn_params.is_empty())
        .then(|| CnnChannel::from_params(cnn_params, 0.0))
        .transpose()?;
    MultichannelModel::from_parts(classes, rule, fingerprint, lstm, cnn)
}

pub fn save(model: &MultichannelModel, path: &Path) -> Result<(), FusionError> {
    std::fs::write(path, write_model(model)).map_err(|source| {
        ContainerError::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

pub fn load(path: &Path) -> Result<MultichannelModel, FusionError> {
    let bytes = std::fs::read(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(&bytes)
}
