//! Small text utilities shared across modules.

use std::collections::HashSet;
use std::sync::OnceLock;

pub const SENTENCE_FINAL: [char; 3] = ['.', '!', '?'];

pub fn ends_sentence(text: &str) -> bool {
    text.trim_end().ends_with(SENTENCE_FINAL)
}

/// Trims and appends `.` when the text lacks sentence-final punctuation.
pub fn ensure_terminal_punctuation(text: &str) -> String {
    let trimmed = text.trim();
    if trimmed.is_empty() || ends_sentence(trimmed) {
        trimmed.to_string()
    } else {
        format!("{trimmed}.")
    }
}

/// Lowercase word tokens with surrounding punctuation removed. Character
/// tags survive intact (`[char_1]` after lowercasing).
pub fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let w = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '[' && c != ']' && c != '_');
            let w = if w.starts_with('[') && w.contains(']') {
                &w[..=w.find(']').unwrap_or(w.len() - 1)]
            } else {
                w.trim_matches(|c: char| !c.is_alphanumeric())
            };
            let w = w.strip_suffix("'s").unwrap_or(w);
            (!w.is_empty()).then(|| w.to_lowercase())
        })
        .collect()
}

/// Splits text into word and punctuation tokens: `"Hi, Bob."` becomes
/// `["Hi", ",", "Bob", "."]`. Character tags are kept whole.
pub fn split_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut current = String::new();
        let mut in_tag = false;
        for c in chunk.chars() {
            if c == '[' {
                in_tag = true;
            }
            if in_tag || c.is_alphanumeric() || c == '\'' || c == '-' {
                current.push(c);
            } else {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            }
            if c == ']' {
                in_tag = false;
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Inverse of [`split_tokens`] for the common cases: punctuation attaches
/// to the preceding word.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let tok = tok.as_ref();
        let attach = tok.len() == 1 && tok.chars().all(|c| matches!(c, '.' | ',' | '!' | '?' | ';' | ':'));
        if !out.is_empty() && !attach {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// A stopword list: one token per line, UTF-8.
#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn builtin() -> &'static Stopwords {
        static SW: OnceLock<Stopwords> = OnceLock::new();
        SW.get_or_init(|| Stopwords::parse(BUILTIN_STOPWORDS))
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }
}
