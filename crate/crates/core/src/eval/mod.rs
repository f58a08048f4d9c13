//! Corpus ingestion, class statistics and classification metrics.

mod dataset;
mod metrics;
mod report;

pub use dataset::{
    class_stats, class_stats_for, load_tsv, parse_tsv, render_class_table, ClassStats,
    LabeledDataset, TsvStats,
};
pub use metrics::{evaluate, evaluate_indices, Averages, ClassMetrics, EvalReport};
pub use report::{render_key_values, render_report, round_half_up};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `label<TAB>text`")]
    MissingTab { line: usize },
    #[error("line {line}: empty label")]
    EmptyLabel { line: usize },
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("class `{0}` listed twice")]
    DuplicateClass(String),
    #[error("{gold} gold labels but {predicted} predictions")]
    LengthMismatch { gold: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
}
