//! Text normalization for concept descriptions.
//!
//! Descriptions are lowercased and flattened onto a single line before any
//! feature is computed. Mathematical expressions arrive already replaced by
//! `formula_<n>` placeholders.

use std::fmt;

/// Lowercased single-line text with collapsed whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercase, replace line breaks with spaces, collapse whitespace runs and trim.
pub fn preprocess(raw: &str) -> NormalizedText {
    let lowered = raw.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    NormalizedText(out)
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace tokenization with leading/trailing punctuation stripped.
///
/// Tokens that are pure punctuation vanish, so the token count is the
/// description's word count.
pub fn tokenize(text: &NormalizedText) -> Vec<&str> {
    text.0
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !is_token_char(c)))
        .filter(|t| !t.is_empty())
        .collect()
}

/// True for `formula_` followed by one or more ASCII digits.
pub fn is_formula_token(token: &str) -> bool {
    token
        .strip_prefix("formula_")
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

pub fn count_formula_tokens<S: AsRef<str>>(tokens: &[S]) -> usize {
    tokens.iter().filter(|t| is_formula_token(t.as_ref())).count()
}

/// Literal character-level containment. An empty needle never matches.
pub fn contains_substring(needle: &NormalizedText, haystack: &NormalizedText) -> bool {
    !needle.is_empty() && haystack.0.contains(needle.0.as_str())
}
