use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{
    expand_acronyms, find_latin_tokens, strip_noise, translate_hindi_sentences, translate_tokens,
    AcronymDictionary, IdentityClient, TranslationClient,
};

/// Per-stage modification counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PipelineReport {
    pub documents: usize,
    pub documents_changed: usize,
    pub acronyms_expanded: usize,
    pub latin_tokens_found: usize,
    pub tokens_translated: usize,
    pub sentences_translated: usize,
    pub translation_warnings: usize,
    pub noise_tokens_removed: usize,
    pub empty_documents: usize,
}

impl PipelineReport {
    pub fn merge(&mut self, o: &PipelineReport) {
        self.documents += o.documents;
        self.documents_changed += o.documents_changed;
        self.acronyms_expanded += o.acronyms_expanded;
        self.latin_tokens_found += o.latin_tokens_found;
        self.tokens_translated += o.tokens_translated;
        self.sentences_translated += o.sentences_translated;
        self.translation_warnings += o.translation_warnings;
        self.noise_tokens_removed += o.noise_tokens_removed;
        self.empty_documents += o.empty_documents;
    }

    pub fn pairs(&self) -> [(&'static str, usize); 9] {
        [
            ("documents", self.documents),
            ("documents_changed", self.documents_changed),
            ("acronyms_expanded", self.acronyms_expanded),
            ("latin_tokens_found", self.latin_tokens_found),
            ("tokens_translated", self.tokens_translated),
            ("sentences_translated", self.sentences_translated),
            ("translation_warnings", self.translation_warnings),
            ("noise_tokens_removed", self.noise_tokens_removed),
            ("empty_documents", self.empty_documents),
        ]
    }
}

/// `key=value` lines.
impl fmt::Display for PipelineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.pairs() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Processed {
    pub text: String,
    /// Nothing survived cleaning; such documents are excluded from training.
    pub empty: bool,
}

/// The five cleaning stages in order: acronym expansion, Latin-token lookup,
/// Latin-token translation, Hindi-sentence translation, noise removal.
#[derive(Clone)]
pub struct Pipeline {
    acronyms: AcronymDictionary,
    client: Arc<dyn TranslationClient>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::new(AcronymDictionary::new(), Arc::new(IdentityClient))
    }
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("acronyms", &self.acronyms.len())
            .field("client", &self.client.fingerprint())
            .finish()
    }
}

impl Pipeline {
    pub fn new(acronyms: AcronymDictionary, client: Arc<dyn TranslationClient>) -> Self {
        Self { acronyms, client }
    }

    pub fn process(&self, text: &str) -> (Processed, PipelineReport) {
        let mut report = PipelineReport {
            documents: 1,
            ..Default::default()
        };
        let (t, hits) = expand_acronyms(text, &self.acronyms);
        report.acronyms_expanded = hits;

        let positions = find_latin_tokens(&t);
        report.latin_tokens_found = positions.len();
        let (t, tok_stats) = translate_tokens(&t, &positions, self.client.as_ref());
        report.tokens_translated = tok_stats.translated;

        let (t, sent_stats) = translate_hindi_sentences(&t, self.client.as_ref());
        report.sentences_translated = sent_stats.translated;
        report.translation_warnings = tok_stats.warnings + sent_stats.warnings;

        let (t, noise) = strip_noise(&t);
        report.noise_tokens_removed = noise.removed();

        let empty = t.is_empty();
        if empty {
            log::warn!("document empty after cleaning: {text:?}");
            report.empty_documents = 1;
        }
        if t != text {
            report.documents_changed = 1;
        }
        (Processed { text: t, empty }, report)
    }

    /// Processes documents in parallel; output order follows input order.
    pub fn process_all<S: AsRef<str> + Sync>(&self, texts: &[S]) -> (Vec<Processed>, PipelineReport) {
        let results: Vec<(Processed, PipelineReport)> =
            texts.par_iter().map(|t| self.process(t.as_ref())).collect();
        let mut report = PipelineReport::default();
        let mut out = Vec::with_capacity(results.len());
        for (p, r) in results {
            report.merge(&r);
            out.push(p);
        }
        (out, report)
    }

    /// Canonical description of everything that affects the output text.
    pub fn fingerprint_material(&self) -> String {
        let mut s = String::from("pipeline-v1\n");
        for (k, v) in self.acronyms.iter() {
            s.push_str(&format!("acronym\t{k}\t{v}\n"));
        }
        s.push_str(&format!("client\t{}\n", self.client.fingerprint()));
        s
    }
}
