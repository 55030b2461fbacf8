//! Text normalization shared by alignment and retrieval: lowercase, strip
//! punctuation, collapse whitespace.

use crate::event::Span;

fn keep(c: char) -> bool {
    c.is_alphanumeric()
}

pub fn normalize(text: &str) -> String {
    normalize_tokens(text).join(" ")
}

pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|tok| {
            tok.chars()
                .filter(|c| keep(*c))
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Whitespace-delimited tokens as character spans.
pub fn token_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push(Span::new(s, i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
        n = i + 1;
    }
    if let Some(s) = start {
        spans.push(Span::new(s, n));
    }
    spans
}

/// Normalized text with a map from each normalized character back to the
/// original character offset it came from.
#[derive(Debug, Clone)]
pub(crate) struct Normalized {
    pub chars: Vec<char>,
    pub origin: Vec<usize>,
}

impl Normalized {
    pub fn new(text: &str) -> Self {
        let mut chars = Vec::new();
        let mut origin = Vec::new();
        let mut pending_space: Option<usize> = None;
        for (i, c) in text.chars().enumerate() {
            if c.is_whitespace() {
                if !chars.is_empty() && pending_space.is_none() {
                    pending_space = Some(i);
                }
            } else if keep(c) {
                if let Some(sp) = pending_space.take() {
                    chars.push(' ');
                    origin.push(sp);
                }
                for lc in c.to_lowercase() {
                    chars.push(lc);
                    origin.push(i);
                }
            }
        }
        Normalized { chars, origin }
    }

    #[cfg(test)]
    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }
}
