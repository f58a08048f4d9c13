use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn domid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_domid"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const A_WORDS: [&str; 4] = ["కంప్యూటర్", "ప్రోగ్రామ్", "డేటా", "నెట్వర్క్"];
const B_WORDS: [&str; 4] = ["మొక్క", "కణం", "జన్యువు", "ప్రొటీన్"];

/// Two cleanly separable classes with hand-made 4-d embeddings.
fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut vec = format!("{} 4\n", A_WORDS.len() + B_WORDS.len());
    for (i, w) in A_WORDS.iter().enumerate() {
        vec += &format!("{w} 1.0 0.{i} 0.0 0.1\n");
    }
    for (i, w) in B_WORDS.iter().enumerate() {
        vec += &format!("{w} 0.0 0.1 1.0 0.{i}\n");
    }
    fs::write(dir.path().join("emb.vec"), vec).unwrap();
    let mut tsv = String::new();
    for i in 0..10 {
        let a: Vec<&str> = (0..3).map(|j| A_WORDS[(i + j) % 4]).collect();
        let b: Vec<&str> = (0..3).map(|j| B_WORDS[(i + 2 * j) % 4]).collect();
        tsv += &format!("cse\t{}\nbio_tech\t{}\n", a.join(" "), b.join(" "));
    }
    fs::write(dir.path().join("train.tsv"), &tsv).unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "# fixture\ntrain = train.tsv\nval = train.tsv\ntest = train.tsv\nembeddings = emb.vec\n\
         max_len = 8\nlstm_hidden = 4\ncnn_filters = 4\ncnn_kernel_sizes = 2\ncnn_k = 2\n\
         epochs = 15\nlr = 0.05\npatience = 0\nbatch_size = 4\n",
    )
    .unwrap();
    dir
}

fn train(dir: &Path, out: &str, extra: &[&str]) -> PathBuf {
    train_seeded(dir, out, "3", extra)
}

fn train_seeded(dir: &Path, out: &str, seed: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["--config", "run.conf", "--seed", seed];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["train", "--out", out]);
    let o = domid(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join(out)
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(domid(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(domid(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = fixture();
    assert_eq!(domid(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let o = domid(dir.path(), &["--config", "run.conf", "--set", "epochz=3", "train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("epochz"));
    fs::write(dir.path().join("bad.conf"), "lr = 0.1\nhidden_size = 3\n").unwrap();
    let o = domid(dir.path(), &["--config", "bad.conf", "train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hidden_size"));
    let o = domid(dir.path(), &["--config", "run.conf", "--fusion", "median", "train"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_tsv_line_exits_two_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.tsv"), "cse\tడేటా\nno tab here\n").unwrap();
    let o = domid(dir.path(), &["preprocess", "in.tsv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn preprocess_clean_input_is_unchanged() {
    let dir = fixture();
    let o = domid(dir.path(), &["preprocess", "train.tsv", "--out", "clean.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let input = fs::read_to_string(dir.path().join("train.tsv")).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("clean.tsv")).unwrap(), input);
    let report = stdout(&o);
    assert!(report.contains("documents=20"));
    for line in report.lines().filter(|l| !l.starts_with("documents=")) {
        assert!(line.ends_with("=0"), "{line}");
    }
    assert!(dir.path().join("clean.tsv.manifest").exists());
}

#[test]
fn preprocess_counts_acronym_expansions() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("acr.tsv"), "CPU\tకేంద్ర ప్రాసెసింగ్ యూనిట్\nRAM\tరాండమ్ మెమరీ\n").unwrap();
    fs::write(dir.path().join("in.tsv"), "cse\tCPU మరియు RAM వేగం\ncse\tడేటా\n").unwrap();
    fs::write(dir.path().join("p.conf"), "acronyms = acr.tsv\n").unwrap();
    let o = domid(dir.path(), &["--config", "p.conf", "preprocess", "in.tsv", "--out", "o.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("acronyms_expanded=2"), "{}", stdout(&o));
    let cleaned = fs::read_to_string(dir.path().join("o.tsv")).unwrap();
    assert!(cleaned.starts_with("cse\tకేంద్ర ప్రాసెసింగ్ యూనిట్ మరియు రాండమ్ మెమరీ వేగం\n"), "{cleaned}");
}

#[test]
fn training_is_deterministic_and_writes_sidecars() {
    let dir = fixture();
    let a = train(dir.path(), "a.domid", &[]);
    let b = train(dir.path(), "b.domid", &[]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest = fs::read_to_string(dir.path().join("a.domid.manifest")).unwrap();
    assert!(manifest.contains("seed=3"));
    assert!(manifest.contains("version="));
    let history = fs::read_to_string(dir.path().join("a.domid.history.tsv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 2 * 15);
    let c = train_seeded(dir.path(), "c.domid", "4", &[]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn perfect_model_reports_unit_accuracy_and_both_averages() {
    let dir = fixture();
    train(dir.path(), "m.domid", &[]);
    let o = domid(dir.path(), &["--config", "run.conf", "--set", "model=m.domid", "eval"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("accuracy 1.0000"), "{out}");
    assert!(out.contains("macro.f1=1.0000"));
    assert!(out.contains("weighted.f1=1.0000"));
}

#[test]
fn fingerprint_mismatch_exits_three() {
    let dir = fixture();
    train(dir.path(), "m.domid", &[]);
    let o = domid(
        dir.path(),
        &["--config", "run.conf", "--set", "model=m.domid", "--set", "max_len=9", "eval"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("fingerprint"));
}

#[test]
fn predict_preserves_order_and_marks_empty_lines() {
    let dir = fixture();
    train(dir.path(), "m.domid", &[]);
    let lines = format!("{}\n\n{}\n", A_WORDS.join(" "), B_WORDS.join(" "));
    fs::write(dir.path().join("in.txt"), lines).unwrap();
    let o = domid(
        dir.path(),
        &["--config", "run.conf", "--set", "model=m.domid", "predict", "--input", "in.txt"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("cse\t"));
    assert!(rows[1].starts_with("#error\t"));
    assert!(rows[2].starts_with("bio_tech\t"));
    let fields: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(fields.len(), 4);
    for f in &fields[1..] {
        let p: Vec<f64> = f.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(p.len(), 2);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn single_channel_selection() {
    let dir = fixture();
    train(dir.path(), "l.domid", &["--channel", "lstm"]);
    let o = domid(
        dir.path(),
        &["--config", "run.conf", "--set", "model=l.domid", "predict", A_WORDS[0]],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let fields: Vec<String> = stdout(&o).trim_end().split('\t').map(str::to_string).collect();
    assert_eq!(fields[1], fields[2]);
    assert_eq!(fields[3], "-");
    let history = fs::read_to_string(dir.path().join("l.domid.history.tsv")).unwrap();
    assert!(history.lines().skip(1).all(|l| l.starts_with("lstm\t")));
}

#[test]
fn stats_and_baseline() {
    let dir = fixture();
    let o = domid(dir.path(), &["stats", "train.tsv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("cse       10"), "{out}");
    assert!(out.contains("Total     20"), "{out}");
    for model in ["svm", "logistic", "mlp"] {
        let o = domid(
            dir.path(),
            &["--config", "run.conf", "--set", &format!("baseline_model={model}"), "--set", "mlp_lr=0.05", "baseline", "--out", "b.txt"],
        );
        assert!(o.status.success(), "{model}: {}", stderr(&o));
        let report = fs::read_to_string(dir.path().join("b.txt")).unwrap();
        assert!(report.contains("accuracy=1.0000"), "{model}: {report}");
    }
    assert!(dir.path().join("b.txt.manifest").exists());
}

#[test]
fn synth_writes_a_runnable_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = domid(dir.path(), &["synth", "--out", "s", "--train-docs", "60", "--val-docs", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = dir.path().join("s");
    for f in ["train.tsv", "val.tsv", "embeddings.vec", "domid.conf"] {
        assert!(s.join(f).exists(), "{f}");
    }
    let o = domid(
        dir.path(),
        &["--config", "s/domid.conf", "--set", "epochs=1", "--set", "lstm_hidden=4", "train"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    // without --out the model goes to the configured path, where eval finds it
    assert!(s.join("model.domid").exists());
    let o = domid(dir.path(), &["--config", "s/domid.conf", "eval", "s/val.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("accuracy="));
}
