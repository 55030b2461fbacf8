use serde::{Deserialize, Serialize};

use crate::event::SentenceKey;
use crate::textio::StepKind;

/// Counts how many tokens a text costs. Only relative costs are meaningful.
pub trait Tokenizer: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl<F: Fn(&str) -> usize + Send + Sync> Tokenizer for F {
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Decoding passes spent on one sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassLog {
    pub key: SentenceKey,
    pub passes: usize,
    pub input_tokens: usize,
    pub output_tokens: usize,
    pub steps: Vec<StepKind>,
    /// Set when the backend failed; the sentence then has no predictions.
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

impl PassLog {
    pub fn new(key: SentenceKey) -> Self {
        PassLog {
            key,
            ..PassLog::default()
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.input_tokens + self.output_tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub samples: usize,
    pub passes_per_sample: f64,
    pub tokens_per_sample: f64,
    pub input_tokens_per_sample: f64,
    pub output_tokens_per_sample: f64,
    pub failures: usize,
    /// No sentences were processed; all means are reported as 0.
    pub empty: bool,
}

pub fn cost_report(logs: &[PassLog]) -> CostReport {
    let n = logs.len();
    let mean = |f: &dyn Fn(&PassLog) -> usize| {
        if n == 0 {
            0.0
        } else {
            logs.iter().map(f).sum::<usize>() as f64 / n as f64
        }
    };
    CostReport {
        samples: n,
        passes_per_sample: mean(&|l| l.passes),
        tokens_per_sample: mean(&|l| l.total_tokens()),
        input_tokens_per_sample: mean(&|l| l.input_tokens),
        output_tokens_per_sample: mean(&|l| l.output_tokens),
        failures: logs.iter().filter(|l| l.error.is_some()).count(),
        empty: n == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_counts() {
        assert_eq!(WhitespaceTokenizer.count("  a b\tc \n"), 3);
        assert_eq!(WhitespaceTokenizer.count(""), 0);
        let chars = |s: &str| s.chars().count();
        assert_eq!(chars.count("abc"), 3);
    }

    #[test]
    fn report_means() {
        let mut a = PassLog::new(SentenceKey::new("d", 0));
        a.passes = 1;
        a.input_tokens = 10;
        a.output_tokens = 2;
        let mut b = PassLog::new(SentenceKey::new("d", 1));
        b.passes = 3;
        b.input_tokens = 30;
        b.output_tokens = 6;
        b.error = Some("x".into());
        let r = cost_report(&[a, b]);
        assert_eq!(r.passes_per_sample, 2.0);
        assert_eq!(r.tokens_per_sample, 24.0);
        assert_eq!(r.failures, 1);
        assert!(!r.empty);
        let r = cost_report(&[]);
        assert!(r.empty);
        assert_eq!(r.passes_per_sample, 0.0);
        assert_eq!(r.tokens_per_sample, 0.0);
    }
}
