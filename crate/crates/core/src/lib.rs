//! Text domain identification with a two-channel neural classifier.
//!
//! One channel runs a bidirectional LSTM with dot-product self-attention, the
//! other a bank of 1-D convolutions (kernel widths 2, 4, 6) with
//! order-preserving k-max pooling. Their class distributions are fused by an
//! element-wise product. Around that sit a preprocessing pipeline, an
//! embedding store, TF-IDF baselines with SMOTE, and evaluation utilities.

pub mod autodiff;
pub mod baselines;
pub mod channel;
pub mod cnn;
pub mod embedding;
pub mod eval;
pub mod fusion;
pub mod lstm;
pub mod synthetic;
pub mod text;
