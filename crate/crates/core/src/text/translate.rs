use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::script::{is_devanagari_token, is_latin_word, token_core};
use super::{dict, TextError};

pub const ENGLISH: &str = "en";
pub const HINDI: &str = "hi";
pub const TELUGU: &str = "te";

#[derive(Debug, thiserror::Error)]
#[error("translation transport failure: {0}")]
pub struct TransportError(pub String);

/// Translates a token or sentence between language tags.
///
/// `Ok(None)` means the client has no translation; callers keep the input.
/// Implementations must be callable from several threads at once.
pub trait TranslationClient: Send + Sync {
    fn translate(
        &self,
        text: &str,
        source: &str,
        target: &str,
    ) -> Result<Option<String>, TransportError>;

    /// Stable description of the client's behaviour, folded into the
    /// preprocessing fingerprint.
    fn fingerprint(&self) -> String;
}

/// Never translates anything.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityClient;

impl TranslationClient for IdentityClient {
    fn translate(&self, _: &str, _: &str, _: &str) -> Result<Option<String>, TransportError> {
        Ok(None)
    }

    fn fingerprint(&self) -> String {
        "identity".to_string()
    }
}

/// Offline bilingual dictionary (`source<TAB>target` TSV). Entries may be
/// single words or whole sentences; language tags are not consulted.
#[derive(Clone, Debug, Default)]
pub struct DictionaryClient {
    entries: BTreeMap<String, String>,
}

impl DictionaryClient {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    pub fn parse(content: &str) -> Result<Self, TextError> {
        Ok(Self::new(dict::parse_tsv_map(content)?))
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Ok(Self::new(dict::read_tsv_map(path)?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TranslationClient for DictionaryClient {
    fn translate(&self, text: &str, _: &str, _: &str) -> Result<Option<String>, TransportError> {
        Ok(self.entries.get(text.trim()).cloned())
    }

    fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([0]);
        }
        format!("dictionary:{}", hex::encode(h.finalize()))
    }
}

/// Client for a LibreTranslate-style endpoint: `POST {base}/translate` with
/// `{"q", "source", "target", "format"}` returning `{"translatedText"}`.
#[cfg(feature = "remote")]
pub struct HttpClient {
    base_url: String,
    http: reqwest::blocking::Client,
}

#[cfg(feature = "remote")]
impl HttpClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::blocking::Client::new(),
        }
    }
}

#[cfg(feature = "remote")]
impl TranslationClient for HttpClient {
    fn translate(
        &self,
        text: &str,
        source: &str,
        target: &str,
    ) -> Result<Option<String>, TransportError> {
        let body = serde_json::json!({
            "q": text, "source": source, "target": target, "format": "text"
        });
        let resp = self
            .http
            .post(format!("{}/translate", self.base_url))
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| TransportError(e.to_string()))?;
        let value: serde_json::Value = resp.json().map_err(|e| TransportError(e.to_string()))?;
        Ok(value
            .get("translatedText")
            .and_then(|v| v.as_str())
            .filter(|s| !s.trim().is_empty() && s.trim() != text.trim())
            .map(str::to_string))
    }

    fn fingerprint(&self) -> String {
        format!("http:{}", self.base_url)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslationStats {
    pub translated: usize,
    /// Items left as-is because the client had no answer or failed.
    pub warnings: usize,
}

impl TranslationStats {
    pub fn merge(&mut self, other: TranslationStats) {
        self.translated += other.translated;
        self.warnings += other.warnings;
    }
}

/// Whitespace-token positions whose punctuation-trimmed core is a Latin
/// word of two or more letters, in document order.
pub fn find_latin_tokens(text: &str) -> Vec<(usize, String)> {
    text.split_whitespace()
        .enumerate()
        .filter_map(|(i, tok)| {
            let (_, core) = token_core(tok);
            is_latin_word(core).then(|| (i, core.to_string()))
        })
        .collect()
}

fn call(
    client: &dyn TranslationClient,
    text: &str,
    source: &str,
    target: &str,
    stats: &mut TranslationStats,
) -> Option<String> {
    match client.translate(text, source, target) {
        Ok(Some(t)) => {
            stats.translated += 1;
            Some(t)
        }
        Ok(None) => {
            log::debug!("no translation for {text:?} ({source}->{target})");
            stats.warnings += 1;
            None
        }
        Err(e) => {
            log::warn!("{e}; keeping {text:?}");
            stats.warnings += 1;
            None
        }
    }
}

/// Replaces the Latin tokens at `positions` (as returned by
/// [`find_latin_tokens`]) with their Telugu translations. Surrounding
/// punctuation is kept. Untranslatable tokens stay as they are.
pub fn translate_tokens(
    text: &str,
    positions: &[(usize, String)],
    client: &dyn TranslationClient,
) -> (String, TranslationStats) {
    let mut stats = TranslationStats::default();
    if positions.is_empty() {
        return (text.to_string(), stats);
    }
    let mut tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    for (idx, word) in positions {
        let Some(tok) = tokens.get_mut(*idx) else { continue };
        let (prefix, core) = token_core(tok);
        if core != word {
            continue;
        }
        if let Some(t) = call(client, word, ENGLISH, TELUGU, &mut stats) {
            let suffix_start = prefix + core.len();
            *tok = format!("{}{}{}", &tok[..prefix], t, &tok[suffix_start..]);
        }
    }
    if stats.translated == 0 {
        return (text.to_string(), stats);
    }
    (tokens.join(" "), stats)
}

const SENTENCE_END: [char; 5] = ['.', '?', '!', '।', '॥'];

/// Splits text after each sentence terminator. Concatenating the pieces
/// gives back the input.
fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if SENTENCE_END.contains(&c) {
            let end = i + c.len_utf8();
            out.push(&text[start..end]);
            start = end;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// Translates each sentence in which more than half the tokens are
/// Devanagari from Hindi to Telugu as one unit.
pub fn translate_hindi_sentences(
    text: &str,
    client: &dyn TranslationClient,
) -> (String, TranslationStats) {
    let mut stats = TranslationStats::default();
    let mut out = String::with_capacity(text.len());
    for piece in split_sentences(text) {
        let body_end = piece.trim_end_matches(SENTENCE_END).len();
        let (body, terminator) = piece.split_at(body_end);
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let deva = tokens.iter().filter(|t| is_devanagari_token(t)).count();
        if tokens.is_empty() || 2 * deva <= tokens.len() {
            out.push_str(piece);
            continue;
        }
        let lead = &body[..body.len() - body.trim_start().len()];
        match call(client, body.trim(), HINDI, TELUGU, &mut stats) {
            Some(t) => {
                out.push_str(lead);
                out.push_str(&t);
                out.push_str(terminator);
            }
            None => out.push_str(piece),
        }
    }
    if stats.translated == 0 {
        return (text.to_string(), stats);
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn client() -> DictionaryClient {
        DictionaryClient::parse("computer\tకంప్యూటర్\nयह एक परीक्षण है\tఇది ఒక పరీక్ష\n").unwrap()
    }

    #[test]
    fn finds_latin_positions() {
        assert!(find_latin_tokens("ఇది ఒక వాక్యం").is_empty());
        assert_eq!(
            find_latin_tokens("ఇది ఒక మంచి computer ఉంది"),
            vec![(3, "computer".to_string())]
        );
        assert!(find_latin_tokens("a ఒక").is_empty());
        assert_eq!(find_latin_tokens("(data), ఒక")[0], (0, "data".to_string()));
    }

    #[test]
    fn translates_known_words() {
        let text = "ఇది computer.";
        let pos = find_latin_tokens(text);
        let (out, stats) = translate_tokens(text, &pos, &client());
        assert_eq!(out, "ఇది కంప్యూటర్.");
        assert_eq!(stats, TranslationStats { translated: 1, warnings: 0 });
    }

    #[test]
    fn empty_positions_is_identity() {
        let (out, stats) = translate_tokens("x  y", &[], &client());
        assert_eq!(out, "x  y");
        assert_eq!(stats, TranslationStats::default());
    }

    #[test]
    fn unknown_word_falls_back_with_warning() {
        let text = "ఇది  keyboard";
        let pos = find_latin_tokens(text);
        let (out, stats) = translate_tokens(text, &pos, &IdentityClient);
        assert_eq!(out, text);
        assert_eq!(stats.warnings, 1);
        let (out, stats) = translate_tokens(text, &pos, &client());
        assert_eq!(out, text);
        assert_eq!(stats.warnings, 1);
    }

    struct Failing;
    impl TranslationClient for Failing {
        fn translate(&self, _: &str, _: &str, _: &str) -> Result<Option<String>, TransportError> {
            Err(TransportError("connection refused".into()))
        }
        fn fingerprint(&self) -> String {
            "failing".into()
        }
    }

    #[test]
    fn transport_failure_is_identity_with_warning() {
        let text = "hello world ఒక";
        let (out, stats) = translate_tokens(text, &find_latin_tokens(text), &Failing);
        assert_eq!(out, text);
        assert_eq!(stats, TranslationStats { translated: 0, warnings: 2 });
    }

    #[test]
    fn hindi_sentences_translated_whole() {
        let text = "ఇది మొదటిది. यह एक परीक्षण है। ఇంకా";
        let (out, stats) = translate_hindi_sentences(text, &client());
        assert_eq!(out, "ఇది మొదటిది. ఇది ఒక పరీక్ష। ఇంకా");
        assert_eq!(stats.translated, 1);
    }

    #[test]
    fn minority_devanagari_sentence_untouched() {
        let text = "ఇది ఒక यह వాక్యం";
        let (out, stats) = translate_hindi_sentences(text, &client());
        assert_eq!(out, text);
        assert_eq!(stats, TranslationStats::default());
    }

    #[test]
    fn sentence_split_round_trips() {
        let text = "a. b? c! d। e";
        assert_eq!(split_sentences(text).concat(), text);
        assert_eq!(split_sentences(text).len(), 5);
    }
}
