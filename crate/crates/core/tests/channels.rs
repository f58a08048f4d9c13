mod common;

use common::*;
use domid::autodiff::{Tape, Tensor};
use domid::channel::Channel;
use domid::cnn::{conv1d, kmax_pool};
use domid::lstm::{attention, bilstm_forward, lstm_step, LstmParams, MergedStates};
use rand::Rng;

#[test]
fn lstm_channel_gradients() {
    for seed in 0..SEEDS {
        let ch = small_lstm(seed);
        for dropout in [false, true] {
            let (p, x) = channel_gradcheck(&ch, seed, dropout);
            assert!(p.passes(TOL, COORDS), "params seed {seed} dropout {dropout}: {p:?}");
            assert!(x.passes(TOL, COORDS), "input seed {seed} dropout {dropout}: {x:?}");
        }
    }
}

#[test]
fn cnn_channel_gradients() {
    for seed in 0..SEEDS {
        let ch = small_cnn(seed);
        for dropout in [false, true] {
            let (p, x) = channel_gradcheck(&ch, seed, dropout);
            assert!(p.passes(TOL, COORDS), "params seed {seed} dropout {dropout}: {p:?}");
            assert!(x.passes(TOL, COORDS), "input seed {seed} dropout {dropout}: {x:?}");
        }
    }
}

#[test]
fn lstm_step_matches_scalar_oracle() {
    let mut r = rng(11);
    for _ in 0..100 {
        let d = r.random_range(1..=6);
        let dh = r.random_range(1..=5);
        let p = LstmParams::init(d, dh, &mut r);
        let x = random_vec(&mut r, d, -2.0, 2.0);
        let h = random_vec(&mut r, dh, -1.0, 1.0);
        let c = random_vec(&mut r, dh, -2.0, 2.0);
        let (h1, c1) = lstm_step(&p, &x, &h, &c).unwrap();
        let (h2, c2) = lstm_step_oracle(&p, &x, &h, &c);
        for (a, b) in h1.iter().zip(&h2).chain(c1.iter().zip(&c2)) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn lstm_step_hand_example() {
    // d = dh = 1, every weight 0.5, biases 0: z = 0.5 + 0.5·0 = 0.5 for all
    // gates with x = 1, h = 0.
    let mut p = LstmParams::zeros(1, 1);
    for g in 0..4 {
        p.w[g] = Tensor::filled(&[1, 1], 0.5);
    }
    let (h, c) = lstm_step(&p, &[1.0], &[0.0], &[2.0]).unwrap();
    let s = 1.0 / (1.0 + (-0.5f64).exp());
    let c_want = s * 2.0 + s * 0.5f64.tanh();
    assert!((c[0] - c_want).abs() < 1e-15);
    assert!((h[0] - s * c_want.tanh()).abs() < 1e-15);
}

fn random_matrix(r: &mut impl Rng, d: usize, s: usize) -> Tensor {
    Tensor::matrix(d, s, random_vec(r, d * s, -1.0, 1.0)).unwrap()
}

#[test]
fn bilstm_ignores_padding_and_forward_half_is_causal() {
    let mut r = rng(5);
    let (d, dh, s, len) = (3, 4, 9, 6);
    let f = LstmParams::init(d, dh, &mut r);
    let b = LstmParams::init(d, dh, &mut r);
    let m = random_matrix(&mut r, d, s);
    let base = bilstm_forward(&f, &b, &m, len).unwrap();
    assert_eq!(base.len(), len);

    let mut padded = m.clone();
    for row in 0..d {
        for col in len..s {
            padded.set2(row, col, 100.0);
        }
    }
    assert_eq!(bilstm_forward(&f, &b, &padded, len).unwrap(), base);

    // changing column t leaves forward states before t untouched
    let t = 3;
    let mut changed = m.clone();
    changed.set2(0, t, 5.0);
    let other = bilstm_forward(&f, &b, &changed, len).unwrap();
    for i in 0..t {
        assert_eq!(other.states[i][..dh], base.states[i][..dh]);
    }
    for i in t + 1..len {
        assert_eq!(other.states[i][dh..], base.states[i][dh..]);
    }
    assert_ne!(other.states[t][..dh], base.states[t][..dh]);
}

#[test]
fn attention_weights_are_a_distribution() {
    let mut r = rng(8);
    for _ in 0..500 {
        let n = r.random_range(1..=12);
        let width = r.random_range(1..=8);
        let states = (0..n).map(|_| random_vec(&mut r, width, -3.0, 3.0)).collect();
        let a = attention(&MergedStates { states }).unwrap();
        assert_eq!(a.weights.len(), n);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(a.weights.iter().all(|&w| w >= 0.0));
        if n == 1 {
            assert_eq!(a.weights, vec![1.0]);
        }
    }
}

#[test]
fn attention_hand_example() {
    // k = [[1,0],[0,1]], k_n = [0,1]: scores [0,1], context = a·k
    let a = attention(&MergedStates { states: vec![vec![1.0, 0.0], vec![0.0, 1.0]] }).unwrap();
    assert_eq!(a.scores, vec![0.0, 1.0]);
    let e = 1f64.exp();
    let want = [1.0 / (1.0 + e), e / (1.0 + e)];
    for i in 0..2 {
        assert!((a.weights[i] - want[i]).abs() < 1e-15);
        assert!((a.context[i] - want[i]).abs() < 1e-15);
    }
}

#[test]
fn kmax_matches_sort_oracle() {
    kmax_oracle(10_000, 21).unwrap();
}

#[test]
fn kmax_examples() {
    assert_eq!(kmax_pool(&[1.0, 5.0, 2.0, 7.0, 3.0], 3), vec![5.0, 7.0, 3.0]);
    assert_eq!(kmax_pool(&[4.0, 4.0, 1.0, 4.0], 2), vec![4.0, 4.0]);
    assert_eq!(kmax_pool(&[2.0], 3), vec![2.0, 0.0, 0.0]);
}

#[test]
fn convolution_matches_window_sums() {
    let mut r = rng(31);
    let ch = small_cnn(4);
    let bank = ch.filter_bank().unwrap();
    let (d, s, len) = (GRAD_D, 9, 7);
    let m = random_matrix(&mut r, d, s);
    let out = conv1d(&bank, &m, len).unwrap();
    for ((&w, k), (b, pre)) in bank.sizes.iter().zip(&bank.kernels).zip(bank.biases.iter().zip(&out.pre_activation)) {
        let filters = k.shape()[0];
        assert_eq!(pre.shape(), &[filters, len - w + 1]);
        for f in 0..filters {
            for start in 0..=len - w {
                let mut z = b.data()[f];
                for row in 0..d {
                    for off in 0..w {
                        z += k.data()[(f * d + row) * w + off] * m.get2(row, start + off);
                    }
                }
                assert!((pre.get2(f, start) - z).abs() < 1e-12);
            }
        }
    }
    for (pre, post) in out.pre_activation.iter().zip(&out.maps) {
        for (a, b) in pre.data().iter().zip(post.data()) {
            assert_eq!(*b, a.max(0.0));
        }
    }
}

#[test]
fn short_sequences_use_one_padded_window() {
    let ch = small_cnn(2);
    let bank = ch.filter_bank().unwrap();
    let m = Tensor::filled(&[GRAD_D, 6], 0.5);
    let out = conv1d(&bank, &m, 1).unwrap();
    assert_eq!(out.degenerate, vec![2, 3]);
    assert!(out.maps.iter().all(|t| t.shape()[1] == 1));
    // the channel still yields a distribution for a one-token document
    let p = ch.probabilities(&m, 1).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn channels_ignore_padding_columns() {
    let mut r = rng(12);
    let m = random_matrix(&mut r, GRAD_D, GRAD_S);
    let mut padded = m.clone();
    for row in 0..GRAD_D {
        padded.set2(row, GRAD_S - 1, -50.0);
    }
    let lstm = small_lstm(1);
    let cnn = small_cnn(1);
    let len = GRAD_S - 1;
    assert_eq!(lstm.probabilities(&m, len).unwrap(), lstm.probabilities(&padded, len).unwrap());
    assert_eq!(cnn.probabilities(&m, len).unwrap(), cnn.probabilities(&padded, len).unwrap());
}

#[test]
fn dropout_is_identity_without_rng() {
    let mut r = rng(3);
    let m = random_matrix(&mut r, GRAD_D, GRAD_S);
    let ch = small_lstm(6);
    let mut tape = Tape::new();
    let x = tape.constant(m.clone());
    let p = ch.forward(&mut tape, x, 4, None).unwrap();
    assert_eq!(tape.value(p).data(), ch.probabilities(&m, 4).unwrap().as_slice());
}
