use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::stem::stem;
use super::{NormalizedDoc, Result};

/// Spanish article contractions, expanded before tokenization.
pub const CONTRACTIONS: &[(&str, &str)] = &[("del", "de el"), ("al", "a el")];

const STOPWORDS_ES: &str = include_str!("../../data/stopwords_es.txt");

fn markup_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]*>|&#?[A-Za-z0-9]+;").unwrap())
}

fn contraction_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(del|al)\b").unwrap())
}

/// Lowercase-insensitive accent folding: decomposes and drops combining marks.
pub fn fold_accents(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

/// Bundled Spanish stopword list, already lowercase and accent-folded.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(STOPWORDS_ES)
}

/// Reads a one-word-per-line stopword file. Lines starting with `#` are ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    Ok(parse_stopwords(&std::fs::read_to_string(path)?))
}

fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| fold_accents(&l.to_lowercase()))
        .collect()
}

/// Cleans and tokenizes free text.
///
/// Steps, in order: strip markup remnants, lowercase, fold accents,
/// expand contractions, replace everything outside `[a-zñ ]` with spaces,
/// split on whitespace, drop stopwords and one-letter tokens, stem.
/// A stem that would itself be filtered on a second pass (stopword,
/// contraction, too short) is discarded in favour of the unstemmed token so
/// the pipeline is idempotent on its own output.
pub fn normalize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let stripped = markup_re().replace_all(text, " ");
    let lowered = stripped.to_lowercase();
    let folded = fold_accents(&lowered);
    let expanded = contraction_re().replace_all(&folded, |caps: &regex::Captures| {
        let word = &caps[1];
        CONTRACTIONS
            .iter()
            .find(|(c, _)| *c == word)
            .map(|(_, e)| e.to_string())
            .unwrap_or_else(|| word.to_string())
    });
    let cleaned: String = expanded
        .chars()
        .map(|c| if c.is_ascii_lowercase() || c == 'ñ' || c == ' ' { c } else { ' ' })
        .collect();

    cleaned
        .split_whitespace()
        .filter(|t| t.chars().count() >= 2 && !stopwords.contains(*t))
        .map(|t| {
            let s = stem(t);
            if s.len() < 2 || stopwords.contains(&s) || CONTRACTIONS.iter().any(|(c, _)| *c == s) {
                t.to_string()
            } else {
                s
            }
        })
        .collect()
}

pub fn normalize_document(
    doc_id: &str,
    text: &str,
    stopwords: &HashSet<String>,
) -> NormalizedDoc {
    NormalizedDoc {
        doc_id: doc_id.to_string(),
        tokens: normalize(text, stopwords),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn greeting_example() {
        assert_eq!(normalize("Él dijo: ¡HOLA!", &set(&["el"])), vec!["dijo", "hola"]);
    }

    #[test]
    fn empty_input() {
        assert!(normalize("", &default_stopwords()).is_empty());
    }

    #[test]
    fn plural_and_singular_share_a_stem() {
        let sw = default_stopwords();
        let a = normalize("violencia machista", &sw);
        let b = normalize("violencias machistas", &sw);
        assert_eq!(a, b);
        assert_eq!(a, vec!["violenci", "mach"]);
    }

    #[test]
    fn contractions_expand_before_stopwords() {
        let toks = normalize("La sentencia del tribunal al acusado", &set(&["la", "de", "el", "a"]));
        assert_eq!(toks, vec!["sentenci", "tribunal", "acus"]);
    }

    #[test]
    fn markup_digits_and_punctuation_removed() {
        let toks = normalize("<b>Año</b> 2019: niños&nbsp;y niñas!", &set(&["y"]));
        assert_eq!(toks, vec!["ano", "nino", "nina"]);
    }

    #[test]
    fn bundled_stopwords_are_folded() {
        let sw = default_stopwords();
        assert!(sw.len() >= 250, "only {} stopwords", sw.len());
        for w in &sw {
            assert!(w.chars().all(|c| c.is_ascii_lowercase()), "{w:?}");
        }
        assert!(sw.contains("mas") && sw.contains("el") && sw.contains("esta"));
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(text in "[ a-zA-Záéíóúñü¡!,.<>0-9]{0,80}") {
            let sw = default_stopwords();
            let once = normalize(&text, &sw);
            let twice = normalize(&once.join(" "), &sw);
            prop_assert_eq!(&once, &twice);
            for t in &once {
                prop_assert!(t.len() >= 2);
                prop_assert!(t.chars().all(|c| c.is_ascii_lowercase()));
                prop_assert!(!sw.contains(t));
            }
        }

        #[test]
        fn idempotent_on_spanish_words(words in proptest::collection::vec(
            proptest::sample::select(vec![
                "violencias", "machistas", "mujeres", "del", "al", "sentencias", "casas",
                "condenados", "juzgado", "políticas", "económica", "nacionales", "fueron",
                "estaba", "tribunales", "agresión", "víctimas", "asesinato", "denunciaron",
            ]), 0..12)) {
            let sw = default_stopwords();
            let once = normalize(&words.join(" "), &sw);
            prop_assert_eq!(normalize(&once.join(" "), &sw), once);
        }
    }
}
