use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of a finite-difference gradient check.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Coordinates skipped because the function has a kink within one step
    /// (ReLU at zero, a k-max selection change).
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    /// (coordinate, analytic, numeric) for the worst coordinate.
    pub worst: Option<(usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64, min_checked: usize) -> bool {
        self.checked >= min_checked && self.max_rel_error < tolerance
    }
}

/// Compares `analytic` against central differences of `f` at `x` on
/// `coords` randomly drawn coordinates.
///
/// Relative error is `|a − n| / max(|a|, |n|, 1e-6)`. A coordinate whose
/// second difference exceeds `1e-8` is treated as non-smooth and replaced by
/// another draw.
pub fn finite_difference_check<F>(
    f: F,
    x: &[f64],
    analytic: &[f64],
    coords: usize,
    step: f64,
    seed: u64,
) -> GradCheckReport
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(x.len(), analytic.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut rng);
    let f0 = f(x);
    let mut point = x.to_vec();
    let mut report = GradCheckReport {
        checked: 0,
        skipped_kinks: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for i in order {
        if report.checked >= coords {
            break;
        }
        let orig = point[i];
        point[i] = orig + step;
        let plus = f(&point);
        point[i] = orig - step;
        let minus = f(&point);
        point[i] = orig;
        if (plus - 2.0 * f0 + minus).abs() > 1e-8 {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        if rel >= report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = Some((i, a, numeric));
        }
        report.checked += 1;
    }
    report
}
