use std::collections::BTreeMap;
use std::path::Path;

use super::{dict, TextError};

/// Uppercase Latin acronym → expansion. Lookup is case-sensitive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AcronymDictionary {
    map: BTreeMap<String, String>,
}

/// `[A-Z][A-Z0-9]{1,9}`
pub fn is_valid_acronym(key: &str) -> bool {
    let b = key.as_bytes();
    (2..=10).contains(&b.len())
        && b[0].is_ascii_uppercase()
        && b[1..].iter().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

impl AcronymDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut d = Self::new();
        for (k, v) in pairs {
            d.insert(k.into(), v.into())?;
        }
        Ok(d)
    }

    pub fn insert(&mut self, key: String, expansion: String) -> Result<(), TextError> {
        if !is_valid_acronym(&key) {
            return Err(TextError::InvalidAcronym { line: None, key });
        }
        self.map.insert(key, expansion);
        Ok(())
    }

    pub fn parse(content: &str) -> Result<Self, TextError> {
        let raw = dict::parse_tsv_map(content)?;
        let mut d = Self::new();
        for (key, value) in raw {
            if !is_valid_acronym(&key) {
                let line = content
                    .lines()
                    .position(|l| l.split('\t').next().map(str::trim) == Some(key.as_str()))
                    .map(|i| i + 1);
                return Err(TextError::InvalidAcronym { line, key });
            }
            d.map.insert(key, value);
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let content = std::fs::read_to_string(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.map.iter()
    }
}

/// Replaces every maximal ASCII-alphanumeric run that is a dictionary key by
/// its expansion. Returns the new text and the number of replacements; the
/// text is returned untouched when nothing matched.
pub fn expand_acronyms(text: &str, dict: &AcronymDictionary) -> (String, usize) {
    if dict.is_empty() {
        return (text.to_string(), 0);
    }
    let mut out = String::with_capacity(text.len());
    let mut hits = 0;
    let mut run_start: Option<usize> = None;
    let flush = |out: &mut String, run: &str, hits: &mut usize| match dict.get(run) {
        Some(exp) => {
            out.push_str(exp);
            *hits += 1;
        }
        None => out.push_str(run),
    };
    for (i, c) in text.char_indices() {
        if c.is_ascii_alphanumeric() {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = run_start.take() {
            flush(&mut out, &text[s..i], &mut hits);
        }
        out.push(c);
    }
    if let Some(s) = run_start {
        flush(&mut out, &text[s..], &mut hits);
    }
    if hits == 0 {
        return (text.to_string(), 0);
    }
    (out, hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cpu() -> AcronymDictionary {
        AcronymDictionary::from_pairs([("CPU", "central processing unit")]).unwrap()
    }

    #[test]
    fn substitutes_whole_tokens() {
        assert_eq!(
            expand_acronyms("CPU speed", &cpu()),
            ("central processing unit speed".to_string(), 1)
        );
        assert_eq!(
            expand_acronyms("CPU CPU", &cpu()),
            (
                "central processing unit central processing unit".to_string(),
                2
            )
        );
    }

    #[test]
    fn leaves_non_hits() {
        assert_eq!(expand_acronyms("ఒక రెండు", &cpu()), ("ఒక రెండు".to_string(), 0));
        assert_eq!(expand_acronyms("CPUs cpu xCPU", &cpu()).1, 0);
    }

    #[test]
    fn matches_inside_punctuation_and_script_boundaries() {
        assert_eq!(
            expand_acronyms("(CPU)-CPUలో", &cpu()).0,
            "(central processing unit)-central processing unitలో"
        );
    }

    #[test]
    fn idempotent_when_expansions_hold_no_keys() {
        let d = cpu();
        let (once, _) = expand_acronyms("the CPU, fast", &d);
        assert_eq!(expand_acronyms(&once, &d), (once.clone(), 0));
    }

    #[test]
    fn validates_keys() {
        assert!(is_valid_acronym("CPU"));
        assert!(is_valid_acronym("IPV6"));
        assert!(!is_valid_acronym("Cpu"));
        assert!(!is_valid_acronym("C"));
        assert!(!is_valid_acronym("ABCDEFGHIJK"));
        assert!(!is_valid_acronym("6LO"));
        let err = AcronymDictionary::parse("OK\tfine\nbad\tx\n").unwrap_err();
        assert!(matches!(err, TextError::InvalidAcronym { line: Some(2), .. }));
    }
}
