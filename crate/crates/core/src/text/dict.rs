use std::collections::BTreeMap;
use std::path::Path;

use super::TextError;

/// Parses `key<TAB>value` lines. Blank lines and lines starting with `#`
/// are skipped; CRLF endings are accepted.
pub fn parse_tsv_map(content: &str) -> Result<BTreeMap<String, String>, TextError> {
    let mut map = BTreeMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('\t')
            .ok_or(TextError::MissingTab { line: i + 1 })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn read_tsv_map(path: &Path) -> Result<BTreeMap<String, String>, TextError> {
    let content = std::fs::read_to_string(path).map_err(|source| TextError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tsv_map(&content)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blanks() {
        let m = parse_tsv_map("# header\nCPU\tcentral processing unit\r\n\nRAM\tmemory\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["CPU"], "central processing unit");
    }

    #[test]
    fn reports_line_without_tab() {
        let err = parse_tsv_map("A\tb\nbroken line\n").unwrap_err();
        assert!(matches!(err, TextError::MissingTab { line: 2 }));
    }
}
