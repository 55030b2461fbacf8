//! Okapi BM25 sentence retrieval over an unlabeled target-domain pool.
//!
//! ```text
//! score(q, d) = Σ_t IDF(t) · f(t,d)·(k1+1) / (f(t,d) + k1·(1 − b + b·|d|/avgdl))
//! IDF(t)      = ln((N − n(t) + 0.5) / (n(t) + 0.5))
//! ```
//!
//! Terms with a negative IDF (present in more than half the pool) get
//! `ε · mean(positive IDFs)` instead, which keeps every score non-negative.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::TermList;
use crate::par::{self, Parallelism};
use crate::text::normalize_tokens;

const SNAPSHOT_MAGIC: &[u8; 8] = b"RDXBM25\0";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("the search index is empty")]
    EmptyIndex,
    #[error("unknown sentence id {0}")]
    UnknownSentenceId(usize),
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("not a BM25 index snapshot")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub k1: f64,
    pub b: f64,
    pub epsilon: f64,
    pub top_k: usize,
    pub min_tokens: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            k1: 1.5,
            b: 0.75,
            epsilon: 0.25,
            top_k: 1,
            min_tokens: 3,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(RetrievalError::InvalidConfig(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RetrievalError::InvalidConfig(format!("b must be in [0, 1], got {}", self.b)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(RetrievalError::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Lowercase, strip punctuation, split on whitespace.
pub fn normalize_query(text: &str) -> Vec<String> {
    normalize_tokens(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: usize,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct SearchIndex {
    config: RetrievalConfig,
    sentences: Vec<String>,
    normalized: Vec<String>,
    term_freqs: Vec<HashMap<String, u32>>,
    lengths: Vec<usize>,
    doc_freq: HashMap<String, usize>,
    idf: HashMap<String, f64>,
    avgdl: f64,
}

impl SearchIndex {
    pub fn build<I, S>(sentences: I, config: RetrievalConfig) -> SearchIndex
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sentences: Vec<String> = sentences.into_iter().map(Into::into).collect();
        let mut term_freqs = Vec::with_capacity(sentences.len());
        let mut lengths = Vec::with_capacity(sentences.len());
        let mut normalized = Vec::with_capacity(sentences.len());
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for s in &sentences {
            let tokens = normalize_tokens(s);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            lengths.push(tokens.len());
            normalized.push(tokens.join(" "));
            term_freqs.push(tf);
        }
        let n = sentences.len() as f64;
        let total: usize = lengths.iter().sum();
        let avgdl = if sentences.is_empty() { 0.0 } else { total as f64 / n };

        let mut idf: HashMap<String, f64> = doc_freq
            .iter()
            .map(|(t, &df)| (t.clone(), ((n - df as f64 + 0.5) / (df as f64 + 0.5)).ln()))
            .collect();
        let positive: Vec<f64> = idf.values().copied().filter(|v| *v > 0.0).collect();
        let floor = if positive.is_empty() {
            0.0
        } else {
            config.epsilon * positive.iter().sum::<f64>() / positive.len() as f64
        };
        for v in idf.values_mut() {
            if *v < 0.0 {
                *v = floor;
            }
        }

        SearchIndex {
            config,
            sentences,
            normalized,
            term_freqs,
            lengths,
            doc_freq,
            idf,
            avgdl,
        }
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, id: usize) -> Option<&str> {
        self.sentences.get(id).map(String::as_str)
    }

    pub fn average_length(&self) -> f64 {
        self.avgdl
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// Effective IDF after the ε floor; 0 for terms outside the pool.
    pub fn idf(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or(0.0)
    }

    pub fn score(&self, query: &[String], id: usize) -> Result<f64, RetrievalError> {
        let tf = self
            .term_freqs
            .get(id)
            .ok_or(RetrievalError::UnknownSentenceId(id))?;
        let RetrievalConfig { k1, b, .. } = self.config;
        let rel_len = if self.avgdl > 0.0 {
            self.lengths[id] as f64 / self.avgdl
        } else {
            0.0
        };
        let norm = k1 * (1.0 - b + b * rel_len);
        Ok(query
            .iter()
            .map(|t| {
                let f = tf.get(t).copied().unwrap_or(0) as f64;
                if f == 0.0 {
                    0.0
                } else {
                    self.idf(t) * f * (k1 + 1.0) / (f + norm)
                }
            })
            .sum())
    }

    /// Top `top_k` sentences by descending score, ties by pool order. Pool
    /// sentences whose normalized text equals the normalized query are skipped.
    pub fn retrieve(&self, query: &str, top_k: usize) -> Result<Vec<Hit>, RetrievalError> {
        self.retrieve_with(query, top_k, Parallelism::Sequential)
    }

    pub fn retrieve_with(
        &self,
        query: &str,
        top_k: usize,
        parallelism: Parallelism,
    ) -> Result<Vec<Hit>, RetrievalError> {
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        let tokens = normalize_query(query);
        let self_text = tokens.join(" ");
        let ids: Vec<usize> = (0..self.len()).collect();
        let scores = par::map(&ids, parallelism, |&id| {
            if self.normalized[id] == self_text {
                None
            } else {
                self.score(&tokens, id).ok().map(|s| (id, s))
            }
        });
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().flatten().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(ranked
            .into_iter()
            .take(top_k)
            .map(|(id, score)| Hit {
                id,
                score,
                text: self.sentences[id].clone(),
            })
            .collect())
    }

    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), RetrievalError> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for v in [self.config.k1, self.config.b, self.config.epsilon] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.config.top_k, self.config.min_tokens, self.sentences.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for s in &self.sentences {
            w.write_all(&(s.len() as u64).to_le_bytes())?;
            w.write_all(s.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a snapshot and rebuilds the term statistics from the stored pool.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<SearchIndex, RetrievalError> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(RetrievalError::BadMagic);
        }
        let mut v4 = [0u8; 4];
        read_exact(&mut r, &mut v4)?;
        let version = u32::from_le_bytes(v4);
        if version != SNAPSHOT_VERSION {
            return Err(RetrievalError::UnsupportedVersion(version));
        }
        let k1 = f64::from_le_bytes(read_8(&mut r)?);
        let b = f64::from_le_bytes(read_8(&mut r)?);
        let epsilon = f64::from_le_bytes(read_8(&mut r)?);
        let top_k = u64::from_le_bytes(read_8(&mut r)?) as usize;
        let min_tokens = u64::from_le_bytes(read_8(&mut r)?) as usize;
        let count = u64::from_le_bytes(read_8(&mut r)?) as usize;
        let config = RetrievalConfig {
            k1,
            b,
            epsilon,
            top_k,
            min_tokens,
        };
        config.validate()?;
        let mut sentences = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let len = u64::from_le_bytes(read_8(&mut r)?) as usize;
            let mut buf = Vec::new();
            let got = r.by_ref().take(len as u64).read_to_end(&mut buf)?;
            if got != len {
                return Err(RetrievalError::Corrupt("truncated sentence".into()));
            }
            sentences.push(
                String::from_utf8(buf).map_err(|e| RetrievalError::Corrupt(e.to_string()))?,
            );
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(RetrievalError::Corrupt("trailing bytes".into()));
        }
        Ok(SearchIndex::build(sentences, config))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let file = std::fs::File::create(path)?;
        self.write_snapshot(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SearchIndex, RetrievalError> {
        let file = std::fs::File::open(path)?;
        Self::read_snapshot(std::io::BufReader::new(file))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), RetrievalError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => RetrievalError::Corrupt("truncated header".into()),
        _ => RetrievalError::Io(e),
    })
}

fn read_8<R: Read>(r: &mut R) -> Result<[u8; 8], RetrievalError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(b)
}

/// Compiled whole-word matcher for a [`TermList`].
#[derive(Debug, Clone)]
pub struct TermMatcher {
    phrases: Vec<Vec<String>>,
}

impl TermMatcher {
    pub fn new(terms: &TermList) -> Self {
        TermMatcher {
            phrases: terms
                .terms()
                .iter()
                .map(|t| normalize_tokens(t))
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    /// Whether any term occurs as a whole-word (token sequence) match, ignoring case.
    pub fn matches(&self, sentence: &str) -> bool {
        self.matches_tokens(&normalize_tokens(sentence))
    }

    fn matches_tokens(&self, tokens: &[String]) -> bool {
        self.phrases
            .iter()
            .any(|p| tokens.windows(p.len()).any(|w| w == p.as_slice()))
    }
}

/// Keeps sentences with at least `min_tokens` tokens that contain a term.
pub fn filter_corpus<'a, S: AsRef<str> + Sync>(
    sentences: &'a [S],
    terms: &TermList,
    min_tokens: usize,
    parallelism: Parallelism,
) -> Vec<&'a str> {
    let matcher = TermMatcher::new(terms);
    let keep = par::map(sentences, parallelism, |s| {
        let tokens = normalize_tokens(s.as_ref());
        tokens.len() >= min_tokens && matcher.matches_tokens(&tokens)
    });
    sentences
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(s, _)| s.as_ref())
        .collect()
}
