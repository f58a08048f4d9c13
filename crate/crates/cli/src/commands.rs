use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use domid::baselines::{
    linear_train, mlp_train, smote_balance, LinearConfig, MlpConfig, SparseVector, TfidfVectorizer,
};
use domid::embedding::EmbeddingTable;
use domid::eval::{
    class_stats_for, evaluate, load_tsv, render_class_table, render_key_values, render_report,
    LabeledDataset,
};
use domid::fusion::{self, ChannelSelection, Featurizer, FusionError, MultichannelModel};
use domid::synthetic::{generate, SyntheticConfig};
use domid::text::{AcronymDictionary, DictionaryClient, IdentityClient, Pipeline, TranslationClient};

use crate::config::{BaselineKind, RunConfig};
use crate::error::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn pipeline(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let acronyms = match cfg.path("acronyms") {
        Some(p) => AcronymDictionary::load(&p)?,
        None => AcronymDictionary::new(),
    };
    let client: Arc<dyn TranslationClient> = match (cfg.path("translations"), cfg.get("translate_url")) {
        (Some(p), _) => Arc::new(DictionaryClient::load(&p)?),
        (None, "") => Arc::new(IdentityClient),
        (None, url) => remote_client(url)?,
    };
    Ok(Pipeline::new(acronyms, client))
}

#[cfg(feature = "remote")]
fn remote_client(url: &str) -> Result<Arc<dyn TranslationClient>, CliError> {
    Ok(Arc::new(domid::text::HttpClient::new(url)))
}

#[cfg(not(feature = "remote"))]
fn remote_client(_: &str) -> Result<Arc<dyn TranslationClient>, CliError> {
    Err(CliError::usage(
        "translate_url needs a build with the `remote` feature; use `translations` for an offline dictionary",
    ))
}

fn featurizer(cfg: &RunConfig) -> Result<Featurizer, CliError> {
    let path = cfg.require_path("embeddings")?;
    let (table, report) = EmbeddingTable::load_vec_file(&path, cfg.oov()?)?;
    log::info!("loaded {} vectors of dimension {}", table.len(), table.dim());
    if report.is_short() {
        log::warn!("{} declares more vectors than it contains", path.display());
    }
    Ok(Featurizer::new(pipeline(cfg)?, Arc::new(table), cfg.max_len()?)?)
}

fn load_corpus(path: &Path) -> Result<LabeledDataset, CliError> {
    let (data, stats) = load_tsv(path)?;
    log::info!("{}: {} documents, {} lines", path.display(), data.len(), stats.lines);
    Ok(data)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, content).map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Sidecar `<out>.manifest`: command, version and the resolved config.
fn write_manifest(out: &Path, command: &str, cfg: &RunConfig) -> Result<(), CliError> {
    let mut text = format!("command={command}\nversion={VERSION}\n");
    text.push_str(&cfg.snapshot());
    let path = sidecar(out, "manifest");
    fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn preprocess(cfg: &RunConfig, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let input = match input {
        Some(p) => p,
        None => cfg.require_path("train")?,
    };
    let data = load_corpus(&input)?;
    let texts: Vec<&str> = data.texts().collect();
    let (processed, report) = pipeline(cfg)?.process_all(&texts);
    let mut body = String::new();
    for (p, label) in processed.iter().zip(data.labels()) {
        if !p.empty {
            let _ = writeln!(body, "{label}\t{}", p.text);
        }
    }
    write_output(&out, &body)?;
    match &out {
        Some(o) => {
            print!("{report}");
            write_manifest(o, "preprocess", cfg)
        }
        None => {
            eprint!("{report}");
            Ok(())
        }
    }
}

pub fn train(cfg: &RunConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let tc = cfg.train_config()?;
    tc.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let selection = cfg.channel()?;
    if tc.joint && selection != ChannelSelection::Multichannel {
        return Err(CliError::usage("joint training needs channel = multichannel"));
    }
    let lstm = cfg.lstm_config()?;
    let cnn = cfg.cnn_config()?;
    cnn.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let out = out
        .or_else(|| cfg.path("model"))
        .unwrap_or_else(|| PathBuf::from("model.domid"));

    let feat = featurizer(cfg)?;
    let train_set = load_corpus(&cfg.require_path("train")?)?;
    let classes = cfg.classes().unwrap_or_else(|| train_set.classes.clone());
    let (train_ex, report) = feat.examples(&train_set, &classes)?;
    log::info!("train cleaning:\n{report}");
    let val_ex = match cfg.path("val") {
        Some(p) => feat.examples(&load_corpus(&p)?, &classes)?.0,
        None if tc.patience > 0 => {
            return Err(CliError::usage("`val` is required unless patience = 0"));
        }
        None => Vec::new(),
    };

    let mut model = MultichannelModel::new(
        classes,
        cfg.fusion()?,
        selection,
        feat.dim(),
        lstm,
        cnn,
        feat.fingerprint(),
        cfg.seed()?,
    )?;
    let history = fusion::train(&mut model, &train_ex, &val_ex, &tc)?;
    fusion::save(&model, &out)?;
    let hist_path = sidecar(&out, "history.tsv");
    fs::write(&hist_path, history.to_tsv())?;
    write_manifest(&out, "train", cfg)?;

    println!("model={}", out.display());
    println!("train_documents={}", train_ex.len());
    println!("val_documents={}", val_ex.len());
    for (unit, best) in [("lstm", history.best_lstm), ("cnn", history.best_cnn), ("joint", history.best_joint)] {
        if let Some(e) = best {
            println!("best_epoch.{unit}={e}");
        }
    }
    Ok(())
}

/// Loads the model and a featurizer that must match it.
fn model_and_featurizer(cfg: &RunConfig) -> Result<(MultichannelModel, Featurizer), CliError> {
    let mut model = fusion::load(&cfg.require_path("model")?)?;
    if cfg.is_set("fusion") {
        model.set_rule(cfg.fusion()?);
    }
    let feat = featurizer(cfg)?;
    model
        .check_fingerprint(&feat)
        .map_err(|e| CliError::mismatch(e.to_string()))?;
    Ok((model, feat))
}

pub fn eval(cfg: &RunConfig, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let (model, feat) = model_and_featurizer(cfg)?;
    let input = match input {
        Some(p) => p,
        None => cfg.require_path("test")?,
    };
    let data = load_corpus(&input)?;
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    let mut empty = 0usize;
    for (text, label) in &data.documents {
        match model.predict(&feat, text) {
            Ok(p) => {
                gold.push(label.as_str());
                pred.push(p.class);
            }
            Err(FusionError::EmptyDocument) => empty += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if empty > 0 {
        log::warn!("{empty} document(s) empty after cleaning were not scored");
    }
    let report = evaluate(&gold, &pred, model.classes())?;
    let mut text = render_report(&report);
    text.push('\n');
    text.push_str(&render_key_values(&report));
    let _ = writeln!(text, "skipped_empty={empty}");
    write_output(&out, &text)?;
    if let Some(o) = &out {
        write_manifest(o, "eval", cfg)?;
    }
    Ok(())
}

fn join(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(",")
}

pub fn predict(
    cfg: &RunConfig,
    texts: Vec<String>,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut docs = texts;
    if let Some(p) = input {
        let content = fs::read(&p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
        docs.extend(String::from_utf8_lossy(&content).lines().map(str::to_string));
    }
    if docs.is_empty() {
        return Err(CliError::usage("nothing to classify: give texts or --input FILE"));
    }
    let (model, feat) = model_and_featurizer(cfg)?;
    let mut w: BufWriter<Box<dyn Write>> = BufWriter::new(match &out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    });
    for doc in &docs {
        match model.predict(&feat, doc) {
            Ok(p) => {
                let opt = |o: &Option<Vec<f64>>| o.as_deref().map_or_else(|| "-".to_string(), join);
                writeln!(w, "{}\t{}\t{}\t{}", p.class, join(&p.p_final), opt(&p.p_lstm), opt(&p.p_cnn))?;
            }
            Err(FusionError::EmptyDocument) => writeln!(w, "#error\tempty document after cleaning")?,
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    if let Some(o) = &out {
        write_manifest(o, "predict", cfg)?;
    }
    Ok(())
}

pub fn baseline(cfg: &RunConfig, input: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let kind = cfg.baseline_model()?;
    let mode = cfg.tfidf_mode()?;
    let pipe = pipeline(cfg)?;
    let train_set = load_corpus(&cfg.require_path("train")?)?;
    let eval_path = match input.or_else(|| cfg.path("test")).or_else(|| cfg.path("val")) {
        Some(p) => p,
        None => return Err(CliError::usage("no corpus to score: set `test` or `val`, or pass a file")),
    };
    let eval_set = load_corpus(&eval_path)?;
    let classes = cfg.classes().unwrap_or_else(|| train_set.classes.clone());

    let clean = |d: &LabeledDataset| {
        let texts: Vec<&str> = d.texts().collect();
        pipe.process_all(&texts).0.into_iter().map(|p| p.text).collect::<Vec<_>>()
    };
    let train_texts = clean(&train_set);
    let mut labels = train_set.label_indices(&classes)?;
    let mut vectorizer = TfidfVectorizer::new(mode);
    vectorizer.min_df = cfg.usize_of("min_df")?;
    vectorizer.max_df = cfg.f64_of("max_df")?;
    let mut vectors = vectorizer.fit_transform(&train_texts)?;
    log::info!("{} features ({mode})", vectorizer.dim());

    if cfg.bool_of("smote")? {
        let dense: Vec<Vec<f64>> = vectors.iter().map(SparseVector::to_dense).collect();
        let (v, y) = smote_balance(&dense, &labels, classes.len(), cfg.usize_of("smote_k")?, cfg.seed()?)?;
        vectors = v.iter().map(|x| SparseVector::from_dense(x)).collect();
        labels = y;
    }
    let data: Vec<(SparseVector, usize)> = vectors.into_iter().zip(labels).collect();
    let seed = cfg.seed()?;
    let epochs = cfg.usize_of("baseline_epochs")?;
    let predictor: Box<dyn Fn(&SparseVector) -> Result<usize, CliError>> = match kind {
        BaselineKind::Linear(loss) => {
            let lc = LinearConfig {
                loss,
                epochs,
                learning_rate: cfg.f64_of("baseline_lr")?,
                l2: cfg.f64_of("baseline_l2")?,
                seed,
            };
            let m = linear_train(&data, classes.len(), &lc)?;
            Box::new(move |x| Ok(m.predict(x)?))
        }
        BaselineKind::Mlp => {
            let mc = MlpConfig {
                hidden: cfg.usize_of("mlp_hidden")?,
                epochs,
                learning_rate: cfg.f64_of("mlp_lr")?,
                batch_size: cfg.usize_of("batch_size")?,
                seed,
            };
            let m = mlp_train(&data, classes.len(), &mc)?;
            Box::new(move |x| Ok(m.predict(x)?))
        }
    };

    let mut pred = Vec::with_capacity(eval_set.len());
    for text in clean(&eval_set) {
        let i = predictor(&vectorizer.transform(&text)?)?;
        pred.push(classes[i].clone());
    }
    let gold: Vec<&str> = eval_set.labels().collect();
    let report = evaluate(&gold, &pred, &classes)?;
    let mut text = render_report(&report);
    text.push('\n');
    text.push_str(&render_key_values(&report));
    write_output(&out, &text)?;
    if let Some(o) = &out {
        write_manifest(o, "baseline", cfg)?;
    }
    Ok(())
}

pub fn stats(inputs: &[PathBuf]) -> Result<(), CliError> {
    let sets = inputs
        .iter()
        .map(|p| load_corpus(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut classes: Vec<String> = Vec::new();
    for s in &sets {
        for c in &s.classes {
            if !classes.contains(c) {
                classes.push(c.clone());
            }
        }
    }
    let names: Vec<String> = inputs
        .iter()
        .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
        .collect();
    let stats: Vec<_> = sets.iter().map(|s| class_stats_for(s, &classes)).collect();
    let columns: Vec<(&str, &_)> = names.iter().map(String::as_str).zip(stats.iter()).collect();
    print!("{}", render_class_table(&columns));
    Ok(())
}

fn dataset_tsv(d: &LabeledDataset) -> String {
    let mut s = String::new();
    for (text, label) in &d.documents {
        let _ = writeln!(s, "{label}\t{text}");
    }
    s
}

/// Settings under which the default synthetic corpus trains in about a
/// minute and reaches high accuracy on every channel.
const SYNTH_CONF: &str = "\
# synthetic smoke-test run
train = train.tsv
val = val.tsv
test = val.tsv
embeddings = embeddings.vec
model = model.domid
max_len = 32
lstm_hidden = 64
lr = 0.01
patience = 0
seed = 1
";

pub fn synth(
    cfg: &RunConfig,
    out: Option<PathBuf>,
    train_docs: usize,
    val_docs: usize,
    dim: usize,
) -> Result<(), CliError> {
    let dir = out.unwrap_or_else(|| PathBuf::from("synthetic"));
    let mut sc = SyntheticConfig {
        train_docs,
        val_docs,
        dim,
        ..Default::default()
    };
    if cfg.is_set("seed") {
        sc.seed = cfg.seed()?;
    }
    let corpus = generate(&sc).map_err(CliError::usage)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    fs::write(dir.join("train.tsv"), dataset_tsv(&corpus.train))?;
    fs::write(dir.join("val.tsv"), dataset_tsv(&corpus.val))?;
    let mut vec = BufWriter::new(fs::File::create(dir.join("embeddings.vec"))?);
    corpus.embeddings.write_vec(&mut vec)?;
    vec.flush()?;
    fs::write(dir.join("domid.conf"), SYNTH_CONF)?;
    println!("wrote {} train and {} val documents to {}", corpus.train.len(), corpus.val.len(), dir.display());
    Ok(())
}
