use super::script::{is_latin_letter, is_noise_char};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseStats {
    /// Whitespace tokens dropped for carrying U+FFFD.
    pub undecodable: usize,
    /// Pieces dropped for being a single Latin letter.
    pub single_latin: usize,
    /// Whitespace tokens made only of punctuation or control characters.
    pub punctuation_only: usize,
}

impl NoiseStats {
    pub fn removed(&self) -> usize {
        self.undecodable + self.single_latin + self.punctuation_only
    }

    pub fn merge(&mut self, o: NoiseStats) {
        self.undecodable += o.undecodable;
        self.single_latin += o.single_latin;
        self.punctuation_only += o.punctuation_only;
    }
}

/// Removes punctuation, tokens containing U+FFFD and single Latin letters,
/// and collapses whitespace to single spaces.
///
/// Punctuation inside a token acts as a separator (`"end.Next"` becomes
/// `"end Next"`). The function is idempotent.
pub fn strip_noise(text: &str) -> (String, NoiseStats) {
    let mut stats = NoiseStats::default();
    let mut kept: Vec<&str> = Vec::new();
    for token in text.split_whitespace() {
        if token.contains('\u{FFFD}') {
            stats.undecodable += 1;
            continue;
        }
        let before = kept.len();
        let mut dropped_letters = 0;
        for piece in token.split(is_noise_char).filter(|p| !p.is_empty()) {
            let mut chars = piece.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                if is_latin_letter(c) {
                    dropped_letters += 1;
                    continue;
                }
            }
            kept.push(piece);
        }
        stats.single_latin += dropped_letters;
        if kept.len() == before && dropped_letters == 0 {
            stats.punctuation_only += 1;
        }
    }
    (kept.join(" "), stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn applies_each_rule() {
        let (out, stats) = strip_noise("hello ! a ఒక");
        assert_eq!(out, "hello ఒక");
        assert_eq!(stats.removed(), 2);
    }

    #[test]
    fn clean_telugu_unchanged() {
        let s = "ఇది ఒక శుభ్రమైన వాక్యం";
        assert_eq!(strip_noise(s), (s.to_string(), NoiseStats::default()));
    }

    #[test]
    fn drops_replacement_characters() {
        assert_eq!(strip_noise("ok b\u{FFFD}d ఒక").0, "ok ఒక");
    }

    #[test]
    fn punctuation_splits_tokens() {
        assert_eq!(strip_noise("end.Next,(x) 3.5").0, "end Next 3 5");
        assert_eq!(strip_noise("  \t ఒక\n\nరెండు  ").0, "ఒక రెండు");
    }

    #[test]
    fn keeps_zero_width_joiners() {
        let s = "శ్\u{200C}రీ";
        assert_eq!(strip_noise(s).0, s);
    }
}
