//! Character classes used by the preprocessing stages.

/// Latin-script letter: ASCII letters plus the Latin-1 Supplement, Latin
/// Extended-A/B and Latin Extended Additional letter ranges.
pub fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}')
            && c != '\u{00D7}'
            && c != '\u{00F7}')
}

/// Devanagari letters, signs and digits, excluding the danda marks.
pub fn is_devanagari(c: char) -> bool {
    matches!(c, '\u{0900}'..='\u{097F}' | '\u{A8E0}'..='\u{A8FF}') && !matches!(c, '\u{0964}' | '\u{0965}')
}

pub fn is_telugu(c: char) -> bool {
    matches!(c, '\u{0C00}'..='\u{0C7F}')
}

/// Punctuation marks treated as noise. Zero-width joiners (U+200C, U+200D)
/// are not punctuation; Indic orthography depends on them.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
                | '\u{0964}' | '\u{0965}' | '\u{0970}'
                | '\u{2010}'..='\u{2027}'
                | '\u{2030}'..='\u{205E}'
                | '\u{3001}'..='\u{3003}'
                | '\u{3008}'..='\u{3011}'
                | '\u{FF01}'..='\u{FF0F}'
                | '\u{FF1A}'..='\u{FF20}'
        )
}

/// Characters that separate tokens during noise removal.
pub fn is_noise_char(c: char) -> bool {
    is_punctuation(c) || c.is_control() || c == '\u{FEFF}'
}

/// Trims punctuation from both ends, returning (prefix length in bytes, core).
pub fn token_core(token: &str) -> (usize, &str) {
    let trimmed_start = token.trim_start_matches(is_punctuation);
    let prefix = token.len() - trimmed_start.len();
    (prefix, trimmed_start.trim_end_matches(is_punctuation))
}

/// True when the token has at least two characters, all Latin letters.
pub fn is_latin_word(core: &str) -> bool {
    core.chars().count() >= 2 && core.chars().all(is_latin_letter)
}

/// True when more than half of the token's letters and marks are Devanagari.
pub fn is_devanagari_token(token: &str) -> bool {
    let mut counted = 0usize;
    let mut deva = 0usize;
    for c in token.chars().filter(|c| !is_noise_char(*c)) {
        counted += 1;
        if is_devanagari(c) {
            deva += 1;
        }
    }
    counted > 0 && 2 * deva > counted
}
