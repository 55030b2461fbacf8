//! Document-level and domain-level context for inference-time prompts.
//!
//! Exam type, section header and prior sentences go before the input sentence;
//! following and retrieved sentences go between the question and the ontology.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::Document;
use crate::retrieval::SearchIndex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("RetrieverMissing: {0:?} context needs a retrieval index")]
    RetrieverMissing(ContextKind),
    #[error("sentence {index} is out of range for document `{doc}`")]
    SentenceOutOfRange { doc: String, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    AdjacentSentences,
    MetadataAndHeader,
    Bm25Retrieval,
    AllCombined,
}

impl ContextKind {
    pub fn needs_retriever(self) -> bool {
        matches!(self, ContextKind::Bm25Retrieval | ContextKind::AllCombined)
    }

    fn adjacent(self) -> bool {
        matches!(self, ContextKind::AdjacentSentences | ContextKind::AllCombined)
    }

    fn metadata(self) -> bool {
        matches!(self, ContextKind::MetadataAndHeader | ContextKind::AllCombined)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub exam_type: Option<String>,
    pub section_header: Option<String>,
    pub prior: Vec<String>,
    pub following: Vec<String>,
    pub retrieved: Vec<String>,
}

impl ContextBundle {
    /// Exam type, section header, prior sentences.
    pub fn prepended(&self) -> Vec<&str> {
        self.exam_type
            .iter()
            .chain(self.section_header.iter())
            .chain(self.prior.iter())
            .map(String::as_str)
            .collect()
    }

    /// Following sentences, retrieved sentences.
    pub fn appended(&self) -> Vec<&str> {
        self.following
            .iter()
            .chain(self.retrieved.iter())
            .map(String::as_str)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.prepended().is_empty() && self.appended().is_empty()
    }
}

/// Prefix through the first `:` of the nearest earlier sentence containing one.
pub fn extract_section_header(document: &Document, sentence_index: usize) -> Option<String> {
    let upto = sentence_index.min(document.sentences.len());
    document.sentences[..upto].iter().rev().find_map(|s| {
        s.find(':')
            .map(|i| s[..=i].trim().to_string())
            .filter(|h| !h.is_empty())
    })
}

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

/// Builds the context bundle of one sentence. Document edges truncate.
pub fn gather(
    document: &Document,
    sentence_index: usize,
    kind: ContextKind,
    retriever: Option<&SearchIndex>,
) -> Result<ContextBundle, ContextError> {
    let Some(sentence) = document.sentences.get(sentence_index) else {
        return Err(ContextError::SentenceOutOfRange {
            doc: document.id.clone(),
            index: sentence_index,
        });
    };
    if kind.needs_retriever() && retriever.is_none() {
        return Err(ContextError::RetrieverMissing(kind));
    }
    let mut bundle = ContextBundle::default();
    if kind.metadata() {
        bundle.exam_type = non_empty(&document.exam_type);
        bundle.section_header = extract_section_header(document, sentence_index);
    }
    if kind.adjacent() {
        if let Some(prev) = sentence_index.checked_sub(1) {
            bundle.prior.extend(non_empty(&document.sentences[prev]));
        }
        if let Some(next) = document.sentences.get(sentence_index + 1) {
            bundle.following.extend(non_empty(next));
        }
    }
    if let Some(index) = retriever.filter(|_| kind.needs_retriever()) {
        if let Ok(hits) = index.retrieve(sentence, index.config().top_k) {
            bundle
                .retrieved
                .extend(hits.into_iter().filter_map(|h| non_empty(&h.text)));
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::RetrievalConfig;

    fn doc(sentences: &[&str]) -> Document {
        Document {
            id: "d1".into(),
            exam_type: "PET CT SKULL THIGH".into(),
            sentences: sentences.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn header_rule() {
        let d = doc(&["FINDINGS:", "Liver: normal size.", "A 3 mm nodule is seen."]);
        assert_eq!(extract_section_header(&d, 2).as_deref(), Some("Liver:"));
        assert_eq!(extract_section_header(&d, 1).as_deref(), Some("FINDINGS:"));
        assert_eq!(extract_section_header(&d, 0), None);
        let d = doc(&["no colon", "still none", "query"]);
        assert_eq!(extract_section_header(&d, 2), None);
    }

    #[test]
    fn adjacent_bundles() {
        let d = doc(&["first one.", "middle one.", "last one."]);
        let b = gather(&d, 1, ContextKind::AdjacentSentences, None).unwrap();
        assert_eq!(b.prepended(), vec!["first one."]);
        assert_eq!(b.appended(), vec!["last one."]);
        let b = gather(&d, 0, ContextKind::AdjacentSentences, None).unwrap();
        assert!(b.prepended().is_empty());
        assert_eq!(b.appended().len(), 1);
        let b = gather(&d, 2, ContextKind::AdjacentSentences, None).unwrap();
        assert_eq!(b.prepended().len(), 1);
        assert!(b.appended().is_empty());
    }

    #[test]
    fn metadata_order() {
        let d = doc(&["IMPRESSION: stable.", "Lung nodule again seen."]);
        let b = gather(&d, 1, ContextKind::MetadataAndHeader, None).unwrap();
        assert_eq!(b.prepended(), vec!["PET CT SKULL THIGH", "IMPRESSION:"]);
        assert!(b.appended().is_empty());
    }

    #[test]
    fn retriever_required() {
        let d = doc(&["a b c"]);
        assert_eq!(
            gather(&d, 0, ContextKind::AllCombined, None),
            Err(ContextError::RetrieverMissing(ContextKind::AllCombined))
        );
        assert!(gather(&d, 3, ContextKind::AdjacentSentences, None).is_err());
    }

    #[test]
    fn all_combined_never_includes_input() {
        let d = doc(&["Chest: clear.", "There is biapical fibrosis", "Heart is normal."]);
        let index = SearchIndex::build(
            [
                "There is biapical fibrosis",
                "There is biapical pulmonary fibrosis compatible with radiation therapy",
                "liver unremarkable today",
            ],
            RetrievalConfig::default(),
        );
        let b = gather(&d, 1, ContextKind::AllCombined, Some(&index)).unwrap();
        assert_eq!(
            b.prepended(),
            vec!["PET CT SKULL THIGH", "Chest:", "Chest: clear."]
        );
        assert_eq!(
            b.appended(),
            vec![
                "Heart is normal.",
                "There is biapical pulmonary fibrosis compatible with radiation therapy"
            ]
        );
        assert!(!b.prepended().contains(&"There is biapical fibrosis"));
        assert!(!b.appended().contains(&"There is biapical fibrosis"));
    }
}
