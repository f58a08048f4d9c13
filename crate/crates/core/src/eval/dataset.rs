use std::fmt::Write as _;
use std::path::Path;

use super::EvalError;

/// Labeled documents in file order plus the ordered set of class names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledDataset {
    pub documents: Vec<(String, String)>,
    pub classes: Vec<String>,
}

/// Line counts seen while reading a TSV corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TsvStats {
    pub lines: usize,
    pub blank_lines: usize,
}

impl LabeledDataset {
    /// Builds a dataset whose class list is the labels in order of first
    /// appearance.
    pub fn new(documents: Vec<(String, String)>) -> Self {
        let mut classes: Vec<String> = Vec::new();
        for (_, label) in &documents {
            if !classes.contains(label) {
                classes.push(label.clone());
            }
        }
        Self { documents, classes }
    }

    /// Uses `classes` as the class list. Every label must appear in it.
    pub fn with_classes(
        documents: Vec<(String, String)>,
        classes: Vec<String>,
    ) -> Result<Self, EvalError> {
        check_unique(&classes)?;
        for (_, label) in &documents {
            if !classes.contains(label) {
                return Err(EvalError::UnknownLabel(label.clone()));
            }
        }
        Ok(Self { documents, classes })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|(t, _)| t.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|(_, l)| l.as_str())
    }

    /// Label indices into `classes`.
    pub fn label_indices(&self, classes: &[String]) -> Result<Vec<usize>, EvalError> {
        self.labels().map(|l| class_index(classes, l)).collect()
    }
}

pub(crate) fn class_index(classes: &[String], label: &str) -> Result<usize, EvalError> {
    classes
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| EvalError::UnknownLabel(label.to_string()))
}

pub(crate) fn check_unique(classes: &[String]) -> Result<(), EvalError> {
    for (i, c) in classes.iter().enumerate() {
        if classes[..i].contains(c) {
            return Err(EvalError::DuplicateClass(c.clone()));
        }
    }
    Ok(())
}

/// Parses `label<TAB>text` lines. Only the first TAB splits, so labels may
/// contain spaces and texts may contain further TABs. Blank lines are
/// skipped and counted.
pub fn parse_tsv(content: &str) -> Result<(LabeledDataset, TsvStats), EvalError> {
    let mut stats = TsvStats::default();
    let mut docs = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        stats.lines += 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            stats.blank_lines += 1;
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or(EvalError::MissingTab { line: i + 1 })?;
        if label.trim().is_empty() {
            return Err(EvalError::EmptyLabel { line: i + 1 });
        }
        docs.push((text.to_string(), label.to_string()));
    }
    if stats.blank_lines > 0 {
        log::warn!("skipped {} blank line(s)", stats.blank_lines);
    }
    Ok((LabeledDataset::new(docs), stats))
}

/// Reads a TSV corpus. Invalid UTF-8 sequences become U+FFFD, which the
/// cleaning pipeline later drops.
pub fn load_tsv(path: &Path) -> Result<(LabeledDataset, TsvStats), EvalError> {
    let bytes = std::fs::read(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let content = String::from_utf8_lossy(&bytes);
    parse_tsv(&content)
}

/// Document counts per class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassStats {
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

impl ClassStats {
    pub fn count(&self, class: &str) -> usize {
        self.counts
            .iter()
            .find(|(c, _)| c == class)
            .map_or(0, |(_, n)| *n)
    }
}

pub fn class_stats(dataset: &LabeledDataset) -> ClassStats {
    class_stats_for(dataset, &dataset.classes)
}

/// Counts over a fixed class order; classes absent from the data count 0 and
/// labels outside `classes` are ignored.
pub fn class_stats_for(dataset: &LabeledDataset, classes: &[String]) -> ClassStats {
    let mut counts: Vec<(String, usize)> = classes.iter().map(|c| (c.clone(), 0)).collect();
    for label in dataset.labels() {
        if let Some(slot) = counts.iter_mut().find(|(c, _)| c == label) {
            slot.1 += 1;
        }
    }
    let total = counts.iter().map(|(_, n)| n).sum();
    ClassStats { counts, total }
}

/// Side-by-side class counts, one column per split:
///
/// ```text
/// class      train  val
/// cse        24937  2175
/// ...
/// Total      68865  5920
/// ```
pub fn render_class_table(columns: &[(&str, &ClassStats)]) -> String {
    let mut classes: Vec<&str> = Vec::new();
    for (_, s) in columns {
        for (c, _) in &s.counts {
            if !classes.contains(&c.as_str()) {
                classes.push(c);
            }
        }
    }
    let name_w = classes.iter().map(|c| c.chars().count()).max().unwrap_or(0).max(5) + 2;
    let col_w: Vec<usize> = columns
        .iter()
        .map(|(h, s)| h.chars().count().max(s.total.to_string().len()) + 2)
        .collect();
    let mut out = String::new();
    let mut row = |name: &str, cells: Vec<String>| {
        let mut line = format!("{name:<name_w$}");
        for (cell, w) in cells.iter().zip(&col_w) {
            let _ = write!(line, "{cell:<w$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    row("class", columns.iter().map(|(h, _)| h.to_string()).collect());
    for c in &classes {
        row(c, columns.iter().map(|(_, s)| s.count(c).to_string()).collect());
    }
    row("Total", columns.iter().map(|(_, s)| s.total.to_string()).collect());
    out
}
