//! Normalization, tokenization and lemmatization for phrase-level input.

use std::collections::HashMap;
use std::sync::OnceLock;

use unicode_normalization::UnicodeNormalization;

const LEMMA_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");
const STOPWORDS: &str = include_str!("../data/stopwords.tsv");

/// NFC, lowercase, trimmed, inner whitespace collapsed to single spaces.
pub fn normalize(s: &str) -> String {
    let lowered: String = s.nfc().collect::<String>().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized whitespace tokens with surrounding punctuation removed.
pub fn tokenize(s: &str) -> Vec<String> {
    normalize(s)
        .split(' ')
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass {
    Stop,
    Preposition,
}

fn load_table(src: &str) -> HashMap<String, String> {
    src.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('\t'))
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .collect()
}

fn exceptions() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| load_table(LEMMA_EXCEPTIONS))
}

fn function_words() -> &'static HashMap<String, String> {
    static TABLE: OnceLock<HashMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| load_table(STOPWORDS))
}

pub fn word_class(token: &str) -> Option<WordClass> {
    match function_words().get(token).map(String::as_str) {
        Some("prep") => Some(WordClass::Preposition),
        Some(_) => Some(WordClass::Stop),
        None => None,
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// `stopp` -> `stop`; `add` stays since the repair only applies to consonants.
fn undouble(stem: &str) -> Option<String> {
    let mut chars = stem.chars().rev();
    let (last, prev) = (chars.next()?, chars.next()?);
    (last == prev && !is_vowel(last) && stem.chars().count() > 2)
        .then(|| stem[..stem.len() - last.len_utf8()].to_string())
}

/// Lemma candidates in preference order: exception, surface form, suffix rules.
pub fn lemma_candidates(token: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut push = |s: String| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    if let Some(lemma) = exceptions().get(token) {
        push(lemma.clone());
    }
    push(token.to_string());
    let len = token.chars().count();
    if let Some(stem) = token.strip_suffix("ies").filter(|_| len > 4) {
        push(format!("{stem}y"));
    }
    if let Some(stem) = token.strip_suffix("es").filter(|_| len > 3) {
        push(stem.to_string());
    }
    if let Some(stem) = token
        .strip_suffix('s')
        .filter(|s| len > 2 && !s.ends_with('s'))
    {
        push(stem.to_string());
    }
    if let Some(stem) = token.strip_suffix("ied").filter(|_| len > 4) {
        push(format!("{stem}y"));
    }
    if let Some(stem) = token.strip_suffix("ed").filter(|_| len > 3) {
        push(stem.to_string());
        push(format!("{stem}e"));
        if let Some(s) = undouble(stem) {
            push(s);
        }
    }
    if let Some(stem) = token.strip_suffix("ing").filter(|_| len > 4) {
        push(stem.to_string());
        push(format!("{stem}e"));
        if let Some(s) = undouble(stem) {
            push(s);
        }
    }
    out
}

/// First candidate accepted by `known`; otherwise the exception-table lemma
/// or the token itself.
pub fn lemmatize(token: &str, known: impl Fn(&str) -> bool) -> String {
    let candidates = lemma_candidates(token);
    candidates
        .iter()
        .find(|c| known(c))
        .cloned()
        .unwrap_or_else(|| candidates.into_iter().next().unwrap_or_default())
}

/// Padded character trigrams of a normalized string.
pub fn trigrams(s: &str) -> Vec<String> {
    let normalized = normalize(s);
    if normalized.is_empty() {
        return Vec::new();
    }
    let padded: Vec<char> = format!("  {normalized} ").chars().collect();
    let mut grams: Vec<String> = padded.windows(3).map(|w| w.iter().collect()).collect();
    grams.sort();
    grams.dedup();
    grams
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_nfc_lowercase_trimmed() {
        assert_eq!(normalize("  Buy   BOOK "), "buy book");
        // e + combining acute composes to a single code point
        assert_eq!(normalize("Cafe\u{301}"), "caf\u{e9}");
    }

    #[test]
    fn tokens_drop_punctuation() {
        assert_eq!(tokenize("Go to the bookstore!"), ["go", "to", "the", "bookstore"]);
    }

    #[test]
    fn suffix_rules() {
        let known = |w: &str| ["study", "shop", "bake", "make", "bus", "book", "go"].contains(&w);
        assert_eq!(lemmatize("studies", known), "study");
        assert_eq!(lemmatize("shopping", known), "shop");
        assert_eq!(lemmatize("baking", known), "bake");
        assert_eq!(lemmatize("baked", known), "bake");
        assert_eq!(lemmatize("makes", known), "make");
        assert_eq!(lemmatize("buses", known), "bus");
        assert_eq!(lemmatize("books", known), "book");
        assert_eq!(lemmatize("went", known), "go");
        assert_eq!(lemmatize("stopped", |w| w == "stop"), "stop");
        assert_eq!(lemmatize("glorp", known), "glorp");
        assert_eq!(lemmatize("bought", |_| false), "buy");
    }

    #[test]
    fn function_word_classes() {
        assert_eq!(word_class("to"), Some(WordClass::Preposition));
        assert_eq!(word_class("the"), Some(WordClass::Stop));
        assert_eq!(word_class("book"), None);
    }

    #[test]
    fn trigrams_are_padded() {
        assert_eq!(trigrams("ab"), ["  a", " ab", "ab "]);
        assert!(trigrams("  ").is_empty());
    }
}
