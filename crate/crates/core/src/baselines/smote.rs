use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BaselineError;

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest other points to `points[i]` (Euclidean;
/// ties to the lower index).
fn neighbors(points: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = (0..points.len())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(&points[i], &points[j]), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, j)| j).collect()
}

pub(crate) fn smote_with<R: Rng, L: FnMut(&mut R) -> f64>(
    minority: &[Vec<f64>],
    target: usize,
    k: usize,
    rng: &mut R,
    mut lambda: L,
) -> Result<Vec<Vec<f64>>, BaselineError> {
    if minority.len() < 2 {
        return Err(BaselineError::TooFewMinority(minority.len()));
    }
    if k == 0 {
        return Err(BaselineError::Config("SMOTE needs k >= 1".into()));
    }
    let dim = minority[0].len();
    if let Some(bad) = minority.iter().find(|v| v.len() != dim) {
        return Err(BaselineError::Dimension {
            expected: dim,
            found: bad.len(),
        });
    }
    let k = k.min(minority.len() - 1);
    let mut cache: Vec<Option<Vec<usize>>> = vec![None; minority.len()];
    let mut out = Vec::with_capacity(target);
    for _ in 0..target {
        let i = rng.random_range(0..minority.len());
        let nn = cache[i].get_or_insert_with(|| neighbors(minority, i, k));
        let j = nn[rng.random_range(0..nn.len())];
        let l = lambda(rng);
        let (a, b) = (&minority[i], &minority[j]);
        out.push(a.iter().zip(b).map(|(x, y)| x + l * (y - x)).collect());
    }
    Ok(out)
}

/// Draws `target` synthetic points `x_i + λ·(x_nn − x_i)`, with `x_i` a
/// random minority point, `x_nn` one of its `k` nearest minority neighbors
/// and `λ ~ U[0, 1]`.
pub fn smote_oversample(
    minority: &[Vec<f64>],
    target: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, BaselineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    smote_with(minority, target, k, &mut rng, |r| r.random_range(0.0..=1.0))
}

/// Oversamples every class up to the size of the largest one. Classes with
/// fewer than two members are left as they are. Synthetic points are
/// appended after the originals.
pub fn smote_balance(
    vectors: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    k: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), BaselineError> {
    if vectors.len() != labels.len() {
        return Err(BaselineError::Config(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let mut by_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes];
    for (v, &y) in vectors.iter().zip(labels) {
        by_class
            .get_mut(y)
            .ok_or(BaselineError::LabelOutOfRange { label: y, classes })?
            .push(v.clone());
    }
    let largest = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut out_v = vectors.to_vec();
    let mut out_y = labels.to_vec();
    for (c, members) in by_class.iter().enumerate() {
        let need = largest - members.len();
        if need == 0 {
            continue;
        }
        if members.len() < 2 {
            log::warn!("class {c} has {} sample(s); not oversampled", members.len());
            continue;
        }
        let synth = smote_oversample(members, need, k, seed.wrapping_add(c as u64))?;
        out_y.extend(std::iter::repeat_n(c, synth.len()));
        out_v.extend(synth);
    }
    Ok((out_v, out_y))
}
