use super::dataset::{check_unique, class_index};
use super::EvalError;

/// Precision, recall and F1 for one class. Undefined ratios (zero
/// denominator) are reported as 0 with the matching flag set.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold documents of this class.
    pub support: u64,
    /// Documents predicted as this class.
    pub predicted: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

impl ClassMetrics {
    pub fn f1_undefined(&self) -> bool {
        self.precision_undefined && self.recall_undefined
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Rows are gold classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub weighted: Averages,
    pub micro: Averages,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Scores string labels against a class list.
pub fn evaluate<G: AsRef<str>, P: AsRef<str>>(
    gold: &[G],
    predicted: &[P],
    classes: &[String],
) -> Result<EvalReport, EvalError> {
    check_unique(classes)?;
    let g = gold
        .iter()
        .map(|l| class_index(classes, l.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let p = predicted
        .iter()
        .map(|l| class_index(classes, l.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    evaluate_indices(&g, &p, classes)
}

/// Scores class indices.
pub fn evaluate_indices(
    gold: &[usize],
    predicted: &[usize],
    classes: &[String],
) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let c = classes.len();
    let mut confusion = vec![vec![0u64; c]; c];
    for (&g, &p) in gold.iter().zip(predicted) {
        for idx in [g, p] {
            if idx >= c {
                return Err(EvalError::UnknownLabel(format!("#{idx}")));
            }
        }
        confusion[g][p] += 1;
    }
    let total = gold.len() as u64;
    let correct: u64 = (0..c).map(|i| confusion[i][i]).sum();

    let mut per_class = Vec::with_capacity(c);
    for k in 0..c {
        let tp = confusion[k][k];
        let support: u64 = confusion[k].iter().sum();
        let predicted: u64 = confusion.iter().map(|row| row[k]).sum();
        let (precision, precision_undefined) = ratio(tp, predicted);
        let (recall, recall_undefined) = ratio(tp, support);
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support,
            predicted,
            precision_undefined,
            recall_undefined,
        });
    }

    let n = c as f64;
    let macro_avg = Averages {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n,
    };
    let weighted_sum = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64
    };
    let weighted = Averages {
        precision: weighted_sum(|m| m.precision),
        recall: weighted_sum(|m| m.recall),
        f1: weighted_sum(|m| m.f1),
    };
    // Single-label: every miss is one FP and one FN, so all three coincide.
    let accuracy = correct as f64 / total as f64;
    let micro = Averages {
        precision: accuracy,
        recall: accuracy,
        f1: accuracy,
    };
    Ok(EvalReport {
        classes: classes.to_vec(),
        confusion,
        total,
        accuracy,
        per_class,
        macro_avg,
        weighted,
        micro,
    })
}
