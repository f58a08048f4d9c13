use std::fmt::Write as _;

use super::metrics::{Averages, EvalReport};

/// Formats `x` with `places` decimals, rounding half away from zero on the
/// shortest decimal representation of `x`, so `0.69925` prints `0.6993`.
pub fn round_half_up(x: f64, places: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(places))
        .map(|b| b - b'0')
        .collect();
    if frac_part.as_bytes().get(places).is_some_and(|&d| d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - places;
    let text: String = digits.iter().map(|d| char::from(b'0' + d)).collect();
    let mut out = String::new();
    if x.is_sign_negative() && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.push_str(&text[..split]);
    if places > 0 {
        out.push('.');
        out.push_str(&text[split..]);
    }
    out
}

fn fmt4(x: f64) -> String {
    round_half_up(x, 4)
}

fn cell(x: f64, undefined: bool) -> String {
    if undefined {
        "n/a".to_string()
    } else {
        fmt4(x)
    }
}

/// Fixed-width text rendering: per-class rows, an `accuracy` line, the
/// macro/weighted/micro aggregates and the confusion matrix.
pub fn render_report(report: &EvalReport) -> String {
    let name_w = report
        .classes
        .iter()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(0)
        .max(8)
        + 2;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}{:<11}{:<11}{:<11}{}",
        "class", "precision", "recall", "f1", "support"
    );
    for (name, m) in report.classes.iter().zip(&report.per_class) {
        let _ = writeln!(
            out,
            "{:<name_w$}{:<11}{:<11}{:<11}{}",
            name,
            cell(m.precision, m.precision_undefined),
            cell(m.recall, m.recall_undefined),
            cell(m.f1, m.f1_undefined()),
            m.support
        );
    }
    out.push('\n');
    let _ = writeln!(out, "accuracy {}", fmt4(report.accuracy));
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<name_w$}{:<11}{:<11}{}",
        "average", "precision", "recall", "f1"
    );
    for (name, a) in averages(report) {
        let _ = writeln!(
            out,
            "{:<name_w$}{:<11}{:<11}{}",
            name,
            fmt4(a.precision),
            fmt4(a.recall),
            fmt4(a.f1)
        );
    }
    out.push('\n');
    out.push_str("confusion (rows gold, columns predicted)\n");
    let width = report
        .confusion
        .iter()
        .flatten()
        .map(|n| n.to_string().len())
        .chain(report.classes.iter().map(|c| c.chars().count()))
        .max()
        .unwrap_or(1)
        + 2;
    let mut header = format!("{:<name_w$}", "");
    for c in &report.classes {
        let _ = write!(header, "{c:>width$}");
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for (name, row) in report.classes.iter().zip(&report.confusion) {
        let mut line = format!("{name:<name_w$}");
        for n in row {
            let _ = write!(line, "{n:>width$}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn averages(report: &EvalReport) -> [(&'static str, Averages); 3] {
    [
        ("macro", report.macro_avg),
        ("weighted", report.weighted),
        ("micro", report.micro),
    ]
}

/// Machine-readable `key=value` lines with the same numbers as
/// [`render_report`].
pub fn render_key_values(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "documents={}", report.total);
    let _ = writeln!(out, "accuracy={}", fmt4(report.accuracy));
    for (name, a) in averages(report) {
        let _ = writeln!(out, "{name}.precision={}", fmt4(a.precision));
        let _ = writeln!(out, "{name}.recall={}", fmt4(a.recall));
        let _ = writeln!(out, "{name}.f1={}", fmt4(a.f1));
    }
    for (name, m) in report.classes.iter().zip(&report.per_class) {
        let _ = writeln!(out, "class.{name}.precision={}", cell(m.precision, m.precision_undefined));
        let _ = writeln!(out, "class.{name}.recall={}", cell(m.recall, m.recall_undefined));
        let _ = writeln!(out, "class.{name}.f1={}", cell(m.f1, m.f1_undefined()));
        let _ = writeln!(out, "class.{name}.support={}", m.support);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(0.69925, 4), "0.6993");
        assert_eq!(round_half_up(0.75, 4), "0.7500");
        assert_eq!(round_half_up(1.0, 4), "1.0000");
        assert_eq!(round_half_up(0.99996, 4), "1.0000");
        assert_eq!(round_half_up(0.12344, 4), "0.1234");
        assert_eq!(round_half_up(2.0 / 3.0, 4), "0.6667");
        assert_eq!(round_half_up(-0.00004, 4), "0.0000");
        assert_eq!(round_half_up(-1.23455, 4), "-1.2346");
        assert_eq!(round_half_up(9.99995, 4), "10.0000");
        assert_eq!(round_half_up(1e-7, 4), "0.0000");
    }

    #[test]
    fn report_contains_accuracy_line() {
        let classes = vec!["a".to_string(), "b".to_string()];
        let r = evaluate(&["a", "a", "b", "b"], &["a", "b", "b", "b"], &classes).unwrap();
        let text = render_report(&r);
        assert!(text.lines().any(|l| l == "accuracy 0.7500"), "{text}");
        assert!(text.contains("0.6667"));
        let kv = render_key_values(&r);
        assert!(kv.contains("accuracy=0.7500\n"));
        assert!(kv.contains("weighted.f1=0.7333\n"));
        assert!(kv.contains("macro.f1=0.7333\n"));
    }

    #[test]
    fn empty_class_prints_na() {
        let classes = vec!["a".to_string(), "b".to_string()];
        let r = evaluate(&["a"], &["a"], &classes).unwrap();
        let text = render_report(&r);
        let row = text.lines().find(|l| l.starts_with("b ")).unwrap();
        assert_eq!(row.matches("n/a").count(), 3, "{row}");
        assert!(render_key_values(&r).contains("class.b.precision=n/a"));
    }
}
