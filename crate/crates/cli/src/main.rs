//! `domid`: domain identification of technical Telugu text.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "domid", version, about = "Multichannel LSTM-CNN domain identification for Telugu text")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// lstm | cnn | multichannel
    #[arg(long, global = true)]
    channel: Option<String>,
    /// product | average | maximum | minimum | addition
    #[arg(long, global = true)]
    fusion: Option<String>,
    /// Output path (file or directory, depending on the command).
    #[arg(long, short, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean a labeled corpus and write `label<TAB>text` lines.
    Preprocess {
        /// Corpus to clean; defaults to `train` from the config.
        input: Option<PathBuf>,
    },
    /// Train the model on `train`, selecting epochs on `val`.
    Train,
    /// Score a trained model on a labeled corpus.
    Eval {
        /// Labeled corpus; defaults to `test` from the config.
        input: Option<PathBuf>,
    },
    /// Classify documents given as arguments or one per line of `--input`.
    Predict {
        texts: Vec<String>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Train and score a TF-IDF baseline.
    Baseline {
        /// Labeled corpus to score; defaults to `test`, then `val`.
        input: Option<PathBuf>,
    },
    /// Per-class document counts of one or more corpora.
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Write a small synthetic corpus, vectors and config for smoke runs.
    Synth {
        #[arg(long, default_value_t = 600)]
        train_docs: usize,
        #[arg(long, default_value_t = 120)]
        val_docs: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
    },
    /// List the accepted config keys with their defaults.
    ConfigKeys,
}

fn resolve(global: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = global.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(c) = &global.channel {
        cfg.set("channel", c)?;
    }
    if let Some(f) = &global.fusion {
        cfg.set("fusion", f)?;
    }
    for kv in &global.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.global)?;
    let out = cli.global.out.clone();
    match cli.command {
        Command::Preprocess { input } => commands::preprocess(&cfg, input, out),
        Command::Train => commands::train(&cfg, out),
        Command::Eval { input } => commands::eval(&cfg, input, out),
        Command::Predict { texts, input } => commands::predict(&cfg, texts, input, out),
        Command::Baseline { input } => commands::baseline(&cfg, input, out),
        Command::Stats { inputs } => commands::stats(&inputs),
        Command::Synth { train_docs, val_docs, dim } => {
            commands::synth(&cfg, out, train_docs, val_docs, dim)
        }
        Command::ConfigKeys => {
            for (k, v, help) in config::KEYS {
                println!("{k}={v}\t# {help}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
