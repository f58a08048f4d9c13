//! Preprocessing: acronym expansion, Latin-token and Hindi-sentence
//! translation, noise removal, tokenization and character n-grams.

mod acronym;
mod dict;
mod noise;
mod pipeline;
pub mod script;
mod translate;

pub use acronym::{expand_acronyms, is_valid_acronym, AcronymDictionary};
pub use dict::{parse_tsv_map, read_tsv_map};
pub use noise::{strip_noise, NoiseStats};
pub use pipeline::{Pipeline, PipelineReport, Processed};
#[cfg(feature = "remote")]
pub use translate::HttpClient;
pub use translate::{
    find_latin_tokens, translate_hindi_sentences, translate_tokens, DictionaryClient,
    IdentityClient, TranslationClient, TranslationStats, TransportError, ENGLISH, HINDI, TELUGU,
};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key<TAB>value`")]
    MissingTab { line: usize },
    #[error("{}invalid acronym key {key:?} (expected [A-Z][A-Z0-9]{{1,9}})", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    InvalidAcronym { line: Option<usize>, key: String },
}

/// Input text with an optional class name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    pub text: String,
    pub label: Option<String>,
}

impl RawDocument {
    pub fn new(text: impl Into<String>, label: Option<String>) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

/// Ordered non-empty tokens with an optional class index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub tokens: Vec<String>,
    pub label: Option<usize>,
}

impl TokenizedDocument {
    pub fn new(tokens: Vec<String>, label: Option<usize>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self { tokens, label }
    }

    pub fn from_text(text: &str, label: Option<usize>) -> Self {
        Self::new(tokenize(text), label)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits on Unicode whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub const NGRAM_MIN: usize = 3;
pub const NGRAM_MAX: usize = 6;

/// Character n-grams of `<token>` for every length in `nmin..=nmax`,
/// shortest length first, each length in left-to-right order.
pub fn char_ngrams(token: &str, nmin: usize, nmax: usize) -> Vec<String> {
    if token.is_empty() {
        return Vec::new();
    }
    let nmin = nmin.max(1);
    let chars: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in nmin..=nmax.min(chars.len()) {
        out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}
