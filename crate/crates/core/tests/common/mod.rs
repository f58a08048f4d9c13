//! Oracles and fixtures shared by the integration tests and the acceptance
//! run. Every oracle here is written independently of the library code it
//! checks: plain loops, sorting and counting.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use domid::autodiff::{finite_difference_check, AutodiffError, GradCheckReport, Tape, Tensor, Var};
use domid::baselines::{smote_oversample, TfidfMode, TfidfVectorizer};
use domid::channel::Channel;
use domid::cnn::{kmax_pool, CnnChannel, CnnConfig};
use domid::embedding::{EmbeddingTable, OovPolicy};
use domid::eval::{evaluate_indices, LabeledDataset};
use domid::fusion::{argmax, fuse, Featurizer, FusionRule};
use domid::lstm::{LstmChannel, LstmConfig, LstmParams};
use domid::text::{AcronymDictionary, DictionaryClient, Pipeline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const COORDS: usize = 20;
pub const SEEDS: u64 = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

// ---------------------------------------------------------------- gradients

pub type OpBuilder = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>>;

/// Gradient check of `build` with respect to all of its inputs. The scalar
/// under test is a fixed random projection of the op's output.
pub fn check_op(
    seed: u64,
    shapes: &[Vec<usize>],
    range: (f64, f64),
    build: &dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
) -> GradCheckReport {
    let mut r = rng(seed);
    let sizes: Vec<usize> = shapes.iter().map(|s| s.iter().product()).collect();
    let total: usize = sizes.iter().sum();
    let x = random_vec(&mut r, total, range.0, range.1);
    let probe_len = {
        let mut tape = Tape::new();
        let vars = leaves(&mut tape, shapes, &x, false);
        let out = build(&mut tape, &vars).unwrap();
        tape.value(out).len()
    };
    let probe = random_vec(&mut r, probe_len, -1.0, 1.0);

    let run = |x: &[f64], grad: bool| -> (f64, Vec<f64>) {
        let mut tape = Tape::new();
        let vars = leaves(&mut tape, shapes, x, grad);
        let out = build(&mut tape, &vars).unwrap();
        let flat = tape.reshape(out, vec![probe_len]).unwrap();
        let w = tape.constant(Tensor::vector(probe.clone()));
        let loss = tape.dot(flat, w).unwrap();
        let value = tape.value(loss).data()[0];
        if !grad {
            return (value, vec![]);
        }
        tape.backward(loss).unwrap();
        let g = vars
            .iter()
            .zip(&sizes)
            .flat_map(|(v, &n)| tape.grad(*v).map(<[f64]>::to_vec).unwrap_or(vec![0.0; n]))
            .collect();
        (value, g)
    };
    let (_, analytic) = run(&x, true);
    finite_difference_check(|p| run(p, false).0, &x, &analytic, COORDS, STEP, seed)
}

fn leaves(tape: &mut Tape, shapes: &[Vec<usize>], x: &[f64], grad: bool) -> Vec<Var> {
    let mut off = 0;
    shapes
        .iter()
        .map(|s| {
            let n: usize = s.iter().product();
            let t = Tensor::new(s.clone(), x[off..off + n].to_vec()).unwrap();
            off += n;
            tape.leaf(t, grad)
        })
        .collect()
}

/// Runs `check_op` over all seeds; `Err` names the first failing seed.
pub fn op_all_seeds(
    name: &str,
    shapes: &[Vec<usize>],
    range: (f64, f64),
    build: &dyn Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
) -> Result<f64, String> {
    let need = COORDS.min(shapes.iter().map(|s| s.iter().product::<usize>()).sum());
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let r = check_op(seed, shapes, range, build);
        if !r.passes(TOL, need) {
            return Err(format!("{name} seed {seed}: {r:?}"));
        }
        worst = worst.max(r.max_rel_error);
    }
    Ok(worst)
}

/// Every differentiable tape operation with input shapes and sampling range.
pub fn op_catalog() -> Vec<(&'static str, Vec<Vec<usize>>, (f64, f64), OpBuilder)> {
    let pair = vec![vec![4, 5], vec![4, 5]];
    let vec24 = vec![vec![24]];
    vec![
        ("add", pair.clone(), (-2.0, 2.0), Box::new(|t: &mut Tape, v: &[Var]| t.add(v[0], v[1])) as OpBuilder),
        ("sub", pair.clone(), (-2.0, 2.0), Box::new(|t, v| t.sub(v[0], v[1]))),
        ("mul", pair, (-2.0, 2.0), Box::new(|t, v| t.mul(v[0], v[1]))),
        (
            "mul_const",
            vec24.clone(),
            (-2.0, 2.0),
            Box::new(|t, v| t.mul_const(v[0], (0..24).map(|i| (i % 3) as f64 * 0.7).collect())),
        ),
        ("scale", vec24.clone(), (-2.0, 2.0), Box::new(|t, v| Ok(t.scale(v[0], -1.7)))),
        ("matmul", vec![vec![3, 4], vec![4, 5]], (-1.0, 1.0), Box::new(|t, v| t.matmul(v[0], v[1]))),
        ("matvec", vec![vec![5, 4], vec![4]], (-1.0, 1.0), Box::new(|t, v| t.matvec(v[0], v[1]))),
        ("transpose", vec![vec![4, 6]], (-1.0, 1.0), Box::new(|t, v| t.transpose(v[0]))),
        ("dot", vec![vec![12], vec![12]], (-1.0, 1.0), Box::new(|t, v| t.dot(v[0], v[1]))),
        ("tanh", vec24.clone(), (-3.0, 3.0), Box::new(|t, v| Ok(t.tanh(v[0])))),
        ("sigmoid", vec24.clone(), (-6.0, 6.0), Box::new(|t, v| Ok(t.sigmoid(v[0])))),
        ("relu", vec24.clone(), (-2.0, 2.0), Box::new(|t, v| Ok(t.relu(v[0])))),
        ("softmax", vec24.clone(), (-3.0, 3.0), Box::new(|t, v| t.softmax(v[0]))),
        ("normalize", vec24.clone(), (0.2, 2.0), Box::new(|t, v| Ok(t.normalize(v[0])))),
        (
            "cross_entropy",
            vec24.clone(),
            (-3.0, 3.0),
            Box::new(|t, v| {
                let p = t.softmax(v[0])?;
                t.cross_entropy(p, 5, 1.3)
            }),
        ),
        ("sum", vec24, (-1.0, 1.0), Box::new(|t, v| Ok(t.sum(v[0])))),
        ("concat", vec![vec![7], vec![3, 4], vec![5]], (-1.0, 1.0), Box::new(|t, v| t.concat(v))),
        ("stack_rows", vec![vec![7], vec![7], vec![7]], (-1.0, 1.0), Box::new(|t, v| t.stack_rows(v))),
        (
            "column",
            vec![vec![6, 5]],
            (-1.0, 1.0),
            Box::new(|t, v| {
                let a = t.column(v[0], 1)?;
                let b = t.column(v[0], 4)?;
                t.concat(&[a, b])
            }),
        ),
        ("reshape", vec![vec![4, 6]], (-1.0, 1.0), Box::new(|t, v| t.reshape(v[0], vec![3, 8]))),
        (
            "conv1d",
            vec![vec![3, 7], vec![2, 3, 2], vec![2]],
            (-1.0, 1.0),
            Box::new(|t, v| t.conv1d(v[0], v[1], v[2], 5)),
        ),
        (
            "conv1d short",
            vec![vec![3, 7], vec![2, 3, 6], vec![2]],
            (-1.0, 1.0),
            Box::new(|t, v| t.conv1d(v[0], v[1], v[2], 3)),
        ),
        ("kmax_rows", vec![vec![4, 8]], (-1.0, 1.0), Box::new(|t, v| t.kmax_rows(v[0], 3))),
        ("kmax_rows short", vec![vec![5, 2]], (-1.0, 1.0), Box::new(|t, v| t.kmax_rows(v[0], 3))),
    ]
}

pub const GRAD_D: usize = 4;
pub const GRAD_S: usize = 7;
pub const GRAD_C: usize = 3;

pub fn small_lstm(seed: u64) -> LstmChannel {
    LstmChannel::new(GRAD_D, GRAD_C, LstmConfig { hidden: 3, dropout: 0.3 }, &mut rng(seed))
}

pub fn small_cnn(seed: u64) -> CnnChannel {
    let cfg = CnnConfig {
        kernel_sizes: vec![2, 3],
        filters: 3,
        k: 2,
        dropout: 0.3,
    };
    CnnChannel::new(GRAD_D, GRAD_C, cfg, &mut rng(seed)).unwrap()
}

/// Gradient of the cross-entropy of a whole channel, checked once over all
/// parameters and once over the input matrix. With `dropout`, the same mask
/// is replayed on every evaluation.
pub fn channel_gradcheck<C: Channel + Clone>(
    base: &C,
    seed: u64,
    dropout: bool,
) -> (GradCheckReport, GradCheckReport) {
    let mut r = rng(seed.wrapping_add(1000));
    let len = r.random_range(3..=GRAD_S);
    let gold = r.random_range(0..GRAD_C);
    let mut input = random_vec(&mut r, GRAD_D * GRAD_S, -1.0, 1.0);
    // padding columns hold garbage that must not matter
    for row in 0..GRAD_D {
        for col in len..GRAD_S {
            input[row * GRAD_S + col] = 9.0;
        }
    }
    let names: Vec<String> = base.params().names().cloned().collect();
    let sizes: Vec<usize> = names.iter().map(|n| base.params().get(n).unwrap().len()).collect();
    let params_flat: Vec<f64> = names
        .iter()
        .flat_map(|n| base.params().get(n).unwrap().data().to_vec())
        .collect();

    let run = |pflat: &[f64], inp: &[f64], grad: bool| -> (f64, Vec<f64>, Vec<f64>) {
        let mut ch = base.clone();
        let mut off = 0;
        for (n, &sz) in names.iter().zip(&sizes) {
            ch.params_mut()
                .get_mut(n)
                .unwrap()
                .data_mut()
                .copy_from_slice(&pflat[off..off + sz]);
            off += sz;
        }
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::matrix(GRAD_D, GRAD_S, inp.to_vec()).unwrap(), true);
        let mut mask_rng = rng(seed.wrapping_add(77));
        let p = ch
            .forward(&mut tape, x, len, dropout.then_some(&mut mask_rng))
            .unwrap();
        let loss = tape.cross_entropy(p, gold, 1.0).unwrap();
        let value = tape.value(loss).data()[0];
        if !grad {
            return (value, vec![], vec![]);
        }
        tape.backward(loss).unwrap();
        let pg = tape.param_grads();
        let gp = names
            .iter()
            .zip(&sizes)
            .flat_map(|(n, &sz)| pg.get(n).cloned().unwrap_or(vec![0.0; sz]))
            .collect();
        let gi = tape.grad(x).unwrap().to_vec();
        (value, gp, gi)
    };
    let (_, gp, gi) = run(&params_flat, &input, true);
    let params = finite_difference_check(|p| run(p, &input, false).0, &params_flat, &gp, COORDS, STEP, seed);
    let inputs = finite_difference_check(|x| run(&params_flat, x, false).0, &input, &gi, COORDS, STEP, seed);
    (params, inputs)
}

// ---------------------------------------------------------------- LSTM oracle

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scalar-loop LSTM step with gates in the order input, forget, output,
/// candidate.
pub fn lstm_step_oracle(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dh = h.len();
    let gate = |g: usize, act: fn(f64) -> f64| -> Vec<f64> {
        (0..dh)
            .map(|r| {
                let mut wx = 0.0;
                for (j, xj) in x.iter().enumerate() {
                    wx += p.w[g].get2(r, j) * xj;
                }
                let mut uh = 0.0;
                for (j, hj) in h.iter().enumerate() {
                    uh += p.u[g].get2(r, j) * hj;
                }
                act(wx + uh + p.b[g].data()[r])
            })
            .collect()
    };
    let (i, f, o, g) = (gate(0, sigmoid), gate(1, sigmoid), gate(2, sigmoid), gate(3, f64::tanh));
    let c_new: Vec<f64> = (0..dh).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
    let h_new: Vec<f64> = (0..dh).map(|k| o[k] * c_new[k].tanh()).collect();
    (h_new, c_new)
}

// ---------------------------------------------------------------- k-max

/// Checks `kmax_pool` on `n` random vectors (with frequent ties) against a
/// sort-based top-k multiset and a subsequence test.
pub fn kmax_oracle(n: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..n {
        let len = r.random_range(1..=20);
        let k = r.random_range(1..=8);
        // quantized values force ties
        let row: Vec<f64> = (0..len).map(|_| r.random_range(-5i32..=5) as f64 * 0.5).collect();
        let out = kmax_pool(&row, k);
        if out.len() != k {
            return Err(format!("case {case}: length {} != {k}", out.len()));
        }
        let kept = k.min(len);
        let mut sorted = row.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut want: Vec<f64> = sorted[..kept].to_vec();
        let mut got: Vec<f64> = out[..kept].to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if want != got {
            return Err(format!("case {case}: multiset {got:?} != {want:?} for {row:?}"));
        }
        if out[kept..].iter().any(|&v| v != 0.0) {
            return Err(format!("case {case}: padding not zero"));
        }
        // order preserved: `out[..kept]` is a subsequence of `row`
        let mut it = row.iter();
        if !out[..kept].iter().all(|v| it.any(|x| x == v)) {
            return Err(format!("case {case}: {out:?} is not a subsequence of {row:?}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- fusion

fn random_distribution(r: &mut impl Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| r.random_range(0.0..1.0f64).powi(2) + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn strict_argmax(p: &[f64]) -> Option<usize> {
    let m = argmax(p);
    p.iter()
        .enumerate()
        .all(|(i, &v)| i == m || v < p[m])
        .then_some(m)
}

/// Draws `n` distribution pairs over 2..=10 classes that share a strict
/// argmax and checks every rule keeps it. Returns the number of pairs.
pub fn fusion_unanimity(n: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let mut done = 0;
    while done < n {
        let c = r.random_range(2..=10);
        let p = random_distribution(&mut r, c);
        let mut q = random_distribution(&mut r, c);
        let (Some(m), Some(mq)) = (strict_argmax(&p), strict_argmax(&q)) else {
            continue;
        };
        q.swap(m, mq);
        for rule in FusionRule::ALL {
            let f = fuse(&p, &q, rule).map_err(|e| e.to_string())?;
            if strict_argmax(&f) != Some(m) {
                return Err(format!("{rule}: {p:?} {q:?} -> {f:?}, expected class {m}"));
            }
        }
        done += 1;
    }
    Ok(done)
}

// ---------------------------------------------------------------- TF-IDF

/// Brute-force TF-IDF: sorted vocabulary, raw counts,
/// `idf = ln((1+N)/(1+df)) + 1`, rows scaled to unit length.
pub fn tfidf_oracle(corpus: &[Vec<String>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut vocab: Vec<String> = corpus.iter().flatten().cloned().collect();
    vocab.sort();
    vocab.dedup();
    let n = corpus.len() as f64;
    let idf: Vec<f64> = vocab
        .iter()
        .map(|t| {
            let df = corpus.iter().filter(|d| d.contains(t)).count() as f64;
            ((1.0 + n) / (1.0 + df)).ln() + 1.0
        })
        .collect();
    let rows = corpus
        .iter()
        .map(|d| {
            let mut row: Vec<f64> = vocab
                .iter()
                .zip(&idf)
                .map(|(t, w)| d.iter().filter(|x| *x == t).count() as f64 * w)
                .collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect();
    (vocab, rows)
}

/// Compares the vectorizer with the oracle on `cases` random corpora of at
/// most 20 documents over at most 50 terms. Returns the largest deviation.
pub fn tfidf_equivalence(cases: usize, seed: u64) -> Result<f64, String> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let docs = r.random_range(1..=20);
        let terms = r.random_range(1..=50);
        let corpus: Vec<Vec<String>> = (0..docs)
            .map(|_| {
                let len = r.random_range(0..=15);
                (0..len).map(|_| format!("w{}", r.random_range(0..terms))).collect()
            })
            .collect();
        let texts: Vec<String> = corpus.iter().map(|d| d.join(" ")).collect();
        if texts.iter().all(String::is_empty) {
            continue;
        }
        let mut v = TfidfVectorizer::new(TfidfMode::Word);
        let got = v.fit_transform(&texts).map_err(|e| e.to_string())?;
        let (vocab, want) = tfidf_oracle(&corpus);
        let fitted: Vec<String> = v.vocabulary().keys().cloned().collect();
        if fitted != vocab {
            return Err(format!("case {case}: vocabulary differs"));
        }
        for (g, w) in got.iter().zip(&want) {
            for (a, b) in g.to_dense().iter().zip(w) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation {worst:e}"));
    }
    Ok(worst)
}

// ---------------------------------------------------------------- metrics

/// Per-pair counting oracle for precision/recall/F1 with the zero-division
/// value 0, plus macro, support-weighted and accuracy.
pub struct MetricsOracle {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<u64>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub weighted_precision: f64,
    pub macro_recall: f64,
}

pub fn metrics_oracle(gold: &[usize], pred: &[usize], classes: usize) -> MetricsOracle {
    let mut o = MetricsOracle {
        precision: vec![],
        recall: vec![],
        f1: vec![],
        support: vec![],
        accuracy: 0.0,
        macro_f1: 0.0,
        weighted_f1: 0.0,
        weighted_precision: 0.0,
        macro_recall: 0.0,
    };
    let n = gold.len() as f64;
    for c in 0..classes {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (&g, &p) in gold.iter().zip(pred) {
            match (g == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let rc = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
        o.precision.push(p);
        o.recall.push(rc);
        o.f1.push(f);
        o.support.push(tp + fn_);
    }
    o.accuracy = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / n;
    o.macro_f1 = o.f1.iter().sum::<f64>() / classes as f64;
    o.macro_recall = o.recall.iter().sum::<f64>() / classes as f64;
    o.weighted_f1 = o.f1.iter().zip(&o.support).map(|(f, s)| f * *s as f64).sum::<f64>() / n;
    o.weighted_precision = o.precision.iter().zip(&o.support).map(|(f, s)| f * *s as f64).sum::<f64>() / n;
    o
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// `evaluate_indices` against the oracle on `cases` random label sets.
pub fn evaluate_equivalence(cases: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..cases {
        let c = r.random_range(2..=7);
        let n = r.random_range(1..=80);
        let gold: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let pred: Vec<usize> = gold
            .iter()
            .map(|&g| if r.random_bool(0.6) { g } else { r.random_range(0..c) })
            .collect();
        let names: Vec<String> = (0..c).map(|i| format!("c{i}")).collect();
        let rep = evaluate_indices(&gold, &pred, &names).map_err(|e| e.to_string())?;
        let o = metrics_oracle(&gold, &pred, c);
        let ok = (0..c).all(|k| {
            close(rep.per_class[k].precision, o.precision[k])
                && close(rep.per_class[k].recall, o.recall[k])
                && close(rep.per_class[k].f1, o.f1[k])
                && rep.per_class[k].support == o.support[k]
        }) && close(rep.accuracy, o.accuracy)
            && close(rep.macro_avg.f1, o.macro_f1)
            && close(rep.macro_avg.recall, o.macro_recall)
            && close(rep.weighted.f1, o.weighted_f1)
            && close(rep.weighted.precision, o.weighted_precision)
            && close(rep.micro.f1, o.accuracy);
        if !ok {
            return Err(format!("case {case}: gold {gold:?} pred {pred:?}"));
        }
        let rows_ok = (0..c).all(|k| rep.confusion[k].iter().sum::<u64>() == o.support[k]);
        let cols_ok = (0..c).all(|k| {
            rep.confusion.iter().map(|row| row[k]).sum::<u64>()
                == pred.iter().filter(|&&p| p == k).count() as u64
        });
        if !(rows_ok && cols_ok) {
            return Err(format!("case {case}: confusion margins"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- SMOTE

pub fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        let ap: f64 = p.iter().zip(a).zip(&ab).map(|((pi, ai), d)| (pi - ai) * d).sum();
        (ap / len2).clamp(0.0, 1.0)
    };
    a.iter()
        .zip(&ab)
        .zip(p)
        .map(|((ai, d), pi)| (ai + t * d - pi).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Every synthetic point lies on a segment between two minority points.
/// Returns the largest distance seen.
pub fn smote_geometry(cases: usize, seed: u64) -> Result<f64, String> {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let m = r.random_range(2..=12);
        let dim = r.random_range(1..=6);
        let pts: Vec<Vec<f64>> = (0..m).map(|_| random_vec(&mut r, dim, -3.0, 3.0)).collect();
        let k = r.random_range(1..=5);
        let synth = smote_oversample(&pts, 40, k, case as u64).map_err(|e| e.to_string())?;
        for s in &synth {
            let mut best = f64::INFINITY;
            for a in &pts {
                for b in &pts {
                    best = best.min(segment_distance(s, a, b));
                }
            }
            worst = worst.max(best);
        }
    }
    if worst > 1e-9 {
        return Err(format!("point {worst:e} away from every segment"));
    }
    Ok(worst)
}

// ---------------------------------------------------------------- text

pub const TELUGU: [&str; 10] = [
    "కంప్యూటర్", "విజ్ఞానం", "భౌతిక", "శాస్త్రం", "జీవ", "సాంకేతికత", "నిర్వహణ", "వ్యవస్థ", "డేటా", "పరిశోధన",
];

pub fn noisy_pipeline() -> Pipeline {
    let acronyms =
        AcronymDictionary::from_pairs([("CPU", "కేంద్ర ప్రాసెసింగ్ యూనిట్"), ("AI", "కృత్రిమ మేధ")]).unwrap();
    let mut words = BTreeMap::new();
    words.insert("computer".to_string(), "కంప్యూటర్".to_string());
    words.insert("network".to_string(), "నెట్వర్క్".to_string());
    words.insert("यह एक परीक्षण है".to_string(), "ఇది ఒక పరీక్ష".to_string());
    Pipeline::new(acronyms, Arc::new(DictionaryClient::new(words)))
}

/// Documents mixing Telugu words with acronyms, known and unknown English
/// words, a Hindi sentence, digits, punctuation, stray Latin letters and
/// undecodable bytes.
pub fn noisy_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut r = rng(seed);
    let extras = [
        "CPU", "AI", "computer", "network", "unknownword", "x", "Q", "2020", "...", "!!", "(",
        "end.Next", "\u{FFFD}bad", "यह एक परीक्षण है।", "😀", "a,b", "\u{2014}", "CPU,", "AI's",
    ];
    (0..n)
        .map(|_| {
            let len = r.random_range(1..=14);
            let mut parts = Vec::with_capacity(len);
            for _ in 0..len {
                let w = if r.random_bool(0.45) {
                    extras[r.random_range(0..extras.len())]
                } else {
                    TELUGU[r.random_range(0..TELUGU.len())]
                };
                parts.push(w);
            }
            let sep = if r.random_bool(0.2) { "  \t" } else { " " };
            parts.join(sep)
        })
        .collect()
}

// ---------------------------------------------------------------- featurizer

/// A featurizer over random vectors for the ten Telugu words above.
pub fn toy_featurizer(dim: usize, max_len: usize, seed: u64) -> Featurizer {
    let mut r = rng(seed);
    let rows = TELUGU
        .iter()
        .map(|w| (w.to_string(), random_vec(&mut r, dim, -1.0, 1.0)));
    let table = EmbeddingTable::from_vectors(dim, OovPolicy::Zero, rows).unwrap();
    Featurizer::new(Pipeline::default(), Arc::new(table), max_len).unwrap()
}

/// Two classes: words 0..5 of [`TELUGU`] mark `a`, words 5..10 mark `b`.
pub fn toy_dataset(n: usize, seed: u64) -> LabeledDataset {
    let mut r = rng(seed);
    let docs = (0..n)
        .map(|i| {
            let c = i % 2;
            let len = r.random_range(2..=8);
            let words: Vec<&str> = (0..len).map(|_| TELUGU[c * 5 + r.random_range(0..5)]).collect();
            (words.join(" "), ["a", "b"][c].to_string())
        })
        .collect();
    LabeledDataset::new(docs)
}
