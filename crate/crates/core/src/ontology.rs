//! Trigger types and the two-level anatomy normalization hierarchy.
//!
//! The built-in hierarchy has 16 parent categories. Every parent admits the
//! child `Undetermined`; all other child names are unique to one parent, which
//! yields 72 distinct child categories over 87 (parent, child) pairs.
//!
//! Child names are kept exactly as the model is trained to emit them, including
//! the historical `Gallblader` spelling under `Hepato-Biliary`. The filter term
//! list ([`default_term_list`]) uses the corrected `Gallbladder`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const UNDETERMINED: &str = "Undetermined";

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("unknown anatomy parent `{0}`")]
    UnknownParent(String),
    #[error("unknown anatomy child `{0}`")]
    UnknownChild(String),
    #[error("child `{child}` is not listed under parent `{parent}`")]
    ChildNotUnderParent { parent: String, child: String },
    #[error("malformed label `{0}`: expected `<parent> | <child>`")]
    Malformed(String),
    #[error("unknown trigger type `{0}`")]
    UnknownTriggerType(String),
    #[error("invalid ontology: {0}")]
    Invalid(String),
    #[error("term list must not be empty")]
    EmptyTermList,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriggerType {
    Indication,
    Lesion,
    #[serde(rename = "Medical_Problem")]
    MedicalProblem,
}

impl TriggerType {
    pub const ALL: [TriggerType; 3] = [
        TriggerType::Indication,
        TriggerType::Lesion,
        TriggerType::MedicalProblem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TriggerType::Indication => "Indication",
            TriggerType::Lesion => "Lesion",
            TriggerType::MedicalProblem => "Medical_Problem",
        }
    }
}

impl fmt::Display for TriggerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TriggerType {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        TriggerType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| OntologyError::UnknownTriggerType(s.to_string()))
    }
}

macro_rules! parents {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum AnatomyParent {
            $($variant),+
        }

        impl AnatomyParent {
            pub const ALL: [AnatomyParent; 16] = [$(AnatomyParent::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(AnatomyParent::$variant => $name),+
                }
            }
        }
    };
}

parents! {
    Neurological => "Neurological",
    Cardiovascular => "Cardiovascular",
    Thoracic => "Thoracic",
    Respiratory => "Respiratory",
    Digestive => "Digestive",
    HepatoBiliary => "Hepato-Biliary",
    Urinary => "Urinary",
    Lymphatic => "Lymphatic",
    FReproductiveObstetric => "F Reproductive Obstetric",
    MReproductive => "M Reproductive",
    MusculoSkeletal => "Musculo-Skeletal",
    BodyRegions => "Body Regions",
    HeadNeck => "Head Neck",
    Skin => "Skin",
    Abdomen => "Abdomen",
    Miscellaneous => "Miscellaneous",
}

impl fmt::Display for AnatomyParent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnatomyParent {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = collapse_whitespace(s);
        AnatomyParent::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or(OntologyError::UnknownParent(s))
    }
}

/// A validated (parent, child) category pair.
///
/// Instances are produced by [`Ontology::label`] or [`Ontology::parse_label`],
/// so the child is always listed under the parent in the ontology that built it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnatomyLabel {
    parent: AnatomyParent,
    child: String,
}

impl AnatomyLabel {
    pub fn parent(&self) -> AnatomyParent {
        self.parent
    }

    pub fn child(&self) -> &str {
        &self.child
    }
}

impl fmt::Display for AnatomyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.parent, self.child)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderKind {
    Trigger,
    Anatomy,
    Joint,
}

const BUILTIN: [(AnatomyParent, &[&str]); 16] = [
    (
        AnatomyParent::Neurological,
        &[
            "Undetermined",
            "Spine Cervical",
            "Spine Thoracic",
            "Spine Lumbar",
            "Spine Sacral",
            "Spine Cord",
            "Spine Unspecified",
            "Brain",
            "Nerve",
            "Pituitary",
            "Cerebrospinal Fluid Pathway",
            "Cerebrovascular System",
            "Extraaxial",
        ],
    ),
    (
        AnatomyParent::Cardiovascular,
        &[
            "Undetermined",
            "Venous",
            "Arterial",
            "Pulmonary Artery",
            "Heart",
            "Pericardial Sac",
            "Coronary Artery",
        ],
    ),
    (AnatomyParent::Thoracic, &["Undetermined", "Mediastinal"]),
    (
        AnatomyParent::Respiratory,
        &["Undetermined", "Lung", "Pleural Membrane", "Tracheobronchial"],
    ),
    (
        AnatomyParent::Digestive,
        &[
            "Undetermined",
            "Esophagus",
            "Stomach",
            "Intestine",
            "Small Intestine",
            "Large Intestine",
        ],
    ),
    (
        AnatomyParent::HepatoBiliary,
        &["Undetermined", "Gallblader", "Bile Duct", "Pancreas", "Liver"],
    ),
    (
        AnatomyParent::Urinary,
        &["Undetermined", "Kidney", "Urinary Bladder", "Ureter"],
    ),
    (AnatomyParent::Lymphatic, &["Undetermined"]),
    (
        AnatomyParent::FReproductiveObstetric,
        &[
            "Undetermined",
            "Breast",
            "Ovary",
            "Uterus",
            "Adnexal",
            "Extra-embryonic",
            "Placenta",
            "Fetus",
            "Umbilical Cord",
            "Female Genital Structure",
        ],
    ),
    (
        AnatomyParent::MReproductive,
        &["Undetermined", "Prostate", "Testis", "Epididymis"],
    ),
    (
        AnatomyParent::MusculoSkeletal,
        &[
            "Undetermined",
            "Skeletal and or Smooth Muscle",
            "Bone and or Joint",
        ],
    ),
    (
        AnatomyParent::BodyRegions,
        &["Undetermined", "Entire Body", "Pelvis", "Lower Limb", "Upper Limb"],
    ),
    (
        AnatomyParent::HeadNeck,
        &[
            "Undetermined",
            "Thyroid",
            "Neck",
            "Ear",
            "Eye",
            "Mouth",
            "Nasal Sinus",
            "Pharynx",
            "Laryngeal",
        ],
    ),
    (
        AnatomyParent::Skin,
        &["Undetermined", "Skin and or Mucous Membrane", "Subcutaneous"],
    ),
    (
        AnatomyParent::Abdomen,
        &[
            "Undetermined",
            "Retroperitoneal",
            "Abdominal Wall",
            "Peritoneal Sac",
            "Spleen",
            "Adrenal Gland",
            "Mesentery",
        ],
    ),
    (
        AnatomyParent::Miscellaneous,
        &[
            "Undetermined",
            "Adipose Tissue",
            "Connective Tissue",
            "Biomedical Device",
        ],
    ),
];

static BUILTIN_ONTOLOGY: LazyLock<Ontology> = LazyLock::new(|| {
    Ontology::from_entries(
        BUILTIN
            .iter()
            .map(|(p, cs)| (*p, cs.iter().map(|c| c.to_string()).collect()))
            .collect(),
    )
    .expect("built-in ontology is valid")
});

/// Trigger types plus the parent → children anatomy hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    entries: Vec<(AnatomyParent, Vec<String>)>,
    lowercase_fallback: bool,
}

impl Ontology {
    pub fn builtin() -> &'static Ontology {
        &BUILTIN_ONTOLOGY
    }

    /// Builds an ontology from parents in rendering order.
    pub fn from_entries(entries: Vec<(AnatomyParent, Vec<String>)>) -> Result<Self, OntologyError> {
        if entries.is_empty() {
            return Err(OntologyError::Invalid("no parent categories".into()));
        }
        let mut seen_parents = Vec::new();
        let mut seen_children: Vec<&str> = Vec::new();
        for (parent, children) in &entries {
            if seen_parents.contains(parent) {
                return Err(OntologyError::Invalid(format!("parent `{parent}` listed twice")));
            }
            seen_parents.push(*parent);
            if !children.iter().any(|c| c == UNDETERMINED) {
                return Err(OntologyError::Invalid(format!(
                    "parent `{parent}` lacks the `{UNDETERMINED}` child"
                )));
            }
            for child in children {
                if child.trim().is_empty() || child.contains('|') || child.contains(',') {
                    return Err(OntologyError::Invalid(format!("bad child name `{child}`")));
                }
                if child != UNDETERMINED {
                    if seen_children.contains(&child.as_str()) {
                        return Err(OntologyError::Invalid(format!(
                            "child `{child}` appears under more than one parent"
                        )));
                    }
                    seen_children.push(child);
                }
            }
        }
        Ok(Ontology {
            entries,
            lowercase_fallback: false,
        })
    }

    /// Loads `{"<parent>": ["<child>", ...], ...}`; object order is rendering order.
    pub fn from_json(json: &str) -> Result<Self, OntologyError> {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(json)?;
        let mut entries = Vec::with_capacity(map.len());
        for (parent, children) in map {
            let parent: AnatomyParent = parent.parse()?;
            let children: Vec<String> = serde_json::from_value(children)?;
            entries.push((parent, children));
        }
        Self::from_entries(entries)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Enables a lowercase retry when exact parsing fails. Off by default.
    pub fn with_lowercase_fallback(mut self, enabled: bool) -> Self {
        self.lowercase_fallback = enabled;
        self
    }

    pub fn parents(&self) -> impl Iterator<Item = AnatomyParent> + '_ {
        self.entries.iter().map(|(p, _)| *p)
    }

    pub fn children(&self, parent: AnatomyParent) -> Option<&[String]> {
        self.entries
            .iter()
            .find(|(p, _)| *p == parent)
            .map(|(_, cs)| cs.as_slice())
    }

    /// All (parent, child) labels in rendering order.
    pub fn labels(&self) -> Vec<AnatomyLabel> {
        self.entries
            .iter()
            .flat_map(|(p, cs)| {
                cs.iter().map(move |c| AnatomyLabel {
                    parent: *p,
                    child: c.clone(),
                })
            })
            .collect()
    }

    pub fn distinct_child_count(&self) -> usize {
        let mut names: Vec<&str> = self
            .entries
            .iter()
            .flat_map(|(_, cs)| cs.iter().map(String::as_str))
            .collect();
        names.sort_unstable();
        names.dedup();
        names.len()
    }

    pub fn label(&self, parent: AnatomyParent, child: &str) -> Result<AnatomyLabel, OntologyError> {
        let child = collapse_whitespace(child);
        let Some(children) = self.children(parent) else {
            return Err(OntologyError::UnknownParent(parent.to_string()));
        };
        if children.contains(&child) {
            return Ok(AnatomyLabel { parent, child });
        }
        let known = self
            .entries
            .iter()
            .any(|(_, cs)| cs.contains(&child));
        if known {
            Err(OntologyError::ChildNotUnderParent {
                parent: parent.to_string(),
                child,
            })
        } else {
            Err(OntologyError::UnknownChild(child))
        }
    }

    /// Parses `"<parent> | <child>"`, tolerating surrounding and repeated whitespace.
    pub fn parse_label(&self, text: &str) -> Result<AnatomyLabel, OntologyError> {
        match self.parse_label_exact(text) {
            Err(err) if self.lowercase_fallback => self.parse_label_lowercase(text).map_err(|_| err),
            other => other,
        }
    }

    fn parse_label_exact(&self, text: &str) -> Result<AnatomyLabel, OntologyError> {
        let (parent, child) = text
            .split_once('|')
            .ok_or_else(|| OntologyError::Malformed(text.trim().to_string()))?;
        if child.contains('|') {
            return Err(OntologyError::Malformed(text.trim().to_string()));
        }
        let parent: AnatomyParent = parent.parse()?;
        if self.children(parent).is_none() {
            return Err(OntologyError::UnknownParent(parent.to_string()));
        }
        self.label(parent, child)
    }

    fn parse_label_lowercase(&self, text: &str) -> Result<AnatomyLabel, OntologyError> {
        let (parent, child) = text
            .split_once('|')
            .ok_or_else(|| OntologyError::Malformed(text.trim().to_string()))?;
        let parent = collapse_whitespace(parent).to_lowercase();
        let child = collapse_whitespace(child).to_lowercase();
        for (p, cs) in &self.entries {
            if p.as_str().to_lowercase() != parent {
                continue;
            }
            if let Some(c) = cs.iter().find(|c| c.to_lowercase() == child) {
                return Ok(AnatomyLabel {
                    parent: *p,
                    child: c.clone(),
                });
            }
        }
        Err(OntologyError::Malformed(text.trim().to_string()))
    }

    pub fn render(&self, kind: RenderKind) -> String {
        match kind {
            RenderKind::Trigger => render_trigger_types(),
            RenderKind::Anatomy => self.render_anatomy(),
            RenderKind::Joint => format!(
                "trigger types: {} anatomy categories: {}",
                render_trigger_types(),
                self.render_anatomy()
            ),
        }
    }

    // Parents are separated by "; " since children are already comma-joined.
    fn render_anatomy(&self) -> String {
        self.entries
            .iter()
            .map(|(p, cs)| format!("{}: {}", p, cs.join(", ")))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl Default for Ontology {
    fn default() -> Self {
        Ontology::builtin().clone()
    }
}

fn render_trigger_types() -> String {
    TriggerType::ALL
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(" | ")
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Anatomy terms used to pre-filter the retrieval pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermList {
    terms: Vec<String>,
}

impl TermList {
    /// Keeps the first spelling of each term after case-folding; blank entries are ignored.
    pub fn new<I, S>(terms: I) -> Result<Self, OntologyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        let mut folded: Vec<String> = Vec::new();
        for term in terms {
            let term = collapse_whitespace(term.as_ref());
            if term.is_empty() {
                continue;
            }
            let key = term.to_lowercase();
            if !folded.contains(&key) {
                folded.push(key);
                out.push(term);
            }
        }
        if out.is_empty() {
            return Err(OntologyError::EmptyTermList);
        }
        Ok(TermList { terms: out })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Case-insensitive membership.
    pub fn contains(&self, term: &str) -> bool {
        let key = term.to_lowercase();
        self.terms.iter().any(|t| t.to_lowercase() == key)
    }
}

#[rustfmt::skip]
const DEFAULT_TERMS: &[&str] = &[
    // Neurological
    "Spine Cervical", "Spine Thoracic", "Spine Lumbar", "Spine Sacral", "Spine Cord", "Spine",
    "Brain", "Nerve", "Pituitary", "Cerebrospinal", "Cerebrovascular", "Extraaxial",
    // Cardiovascular
    "Venous", "Arterial", "Pulmonary Artery", "Heart", "Pericardial Sac", "Coronary Artery",
    // Thoracic
    "Mediastinal",
    // Respiratory
    "Lung", "Pleural Membrane", "Tracheobronchial",
    // Digestive
    "Esophagus", "Stomach", "Intestine", "Intestine", "Intestine",
    // Hepato-Biliary
    "Gallbladder", "Bile", "Pancreas", "Liver",
    // Urinary
    "Kidney", "Urinary Bladder", "Ureter",
    // Reproductive
    "Breast", "Ovary", "Uterus", "Adnexal", "Extra-embryonic", "Placenta", "Fetus",
    "Umbilical Cord", "Genital Structure", "Prostate", "Testis", "Epididymis",
    // Musculo-Skeletal
    "Skeletal", "Smooth Muscle", "Bone", "Pelvis", "Limb",
    // Head Neck
    "Thyroid", "Neck", "Ear", "Eye", "Mouth", "Nasal Sinus", "Pharynx", "Laryngeal",
    // Skin
    "Skin", "Mucous Membrane", "Subcutaneous",
    // Abdomen and frequent section headers
    "Retroperitoneal", "Abdominal", "Peritoneal Sac", "Spleen", "Adrenal", "Mesentery",
    "Adipose", "Chest", "Mediastinum", "Osseous", "Bones", "Extremities", "Lungs",
    "Musculoskeletal", "Ventricular", "Bowel", "Pleura", "Spleen", "Vasculature", "Thorax",
    "Gallbladder", "Kidneys", "Adrenals", "Adrenal", "Cardio",
];

/// The curated anatomy filter terms, deduplicated case-insensitively.
pub fn default_term_list() -> TermList {
    TermList::new(DEFAULT_TERMS).expect("default term list is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let ont = Ontology::builtin();
        assert_eq!(ont.parents().count(), 16);
        assert_eq!(ont.distinct_child_count(), 72);
        assert_eq!(ont.labels().len(), 87);
        for p in AnatomyParent::ALL {
            assert!(ont.children(p).unwrap().iter().any(|c| c == UNDETERMINED));
        }
    }

    #[test]
    fn children_unique_except_undetermined() {
        let ont = Ontology::builtin();
        for label in ont.labels() {
            let owners = ont
                .parents()
                .filter(|p| ont.children(*p).unwrap().iter().any(|c| c == label.child()))
                .count();
            if label.child() == UNDETERMINED {
                assert_eq!(owners, 16);
            } else {
                assert_eq!(owners, 1, "{}", label.child());
            }
        }
    }

    #[test]
    fn parse_label_examples() {
        let ont = Ontology::builtin();
        let l = ont.parse_label("Hepato-Biliary | Liver").unwrap();
        assert_eq!(l.parent(), AnatomyParent::HepatoBiliary);
        assert_eq!(l.child(), "Liver");

        let l = ont.parse_label("  Lymphatic   |   Undetermined ").unwrap();
        assert_eq!(l.parent(), AnatomyParent::Lymphatic);
        assert_eq!(l.child(), UNDETERMINED);

        let l = ont.parse_label("Musculo-Skeletal | Bone  and or\tJoint").unwrap();
        assert_eq!(l.child(), "Bone and or Joint");
    }

    #[test]
    fn parse_label_errors() {
        let ont = Ontology::builtin();
        assert!(matches!(
            ont.parse_label("Liver | Hepato-Biliary"),
            Err(OntologyError::UnknownParent(_))
        ));
        assert!(matches!(
            ont.parse_label("Respiratory | Liver"),
            Err(OntologyError::ChildNotUnderParent { .. })
        ));
        assert!(matches!(
            ont.parse_label("Respiratory | Lungs"),
            Err(OntologyError::UnknownChild(_))
        ));
        assert!(matches!(ont.parse_label("Respiratory"), Err(OntologyError::Malformed(_))));
        assert!(ont.parse_label("hepato-biliary | liver").is_err());
    }

    #[test]
    fn lowercase_fallback_is_opt_in() {
        let ont = Ontology::builtin().clone().with_lowercase_fallback(true);
        let l = ont.parse_label("hepato-biliary | liver").unwrap();
        assert_eq!(l.to_string(), "Hepato-Biliary | Liver");
    }

    #[test]
    fn every_label_round_trips() {
        let ont = Ontology::builtin();
        for label in ont.labels() {
            assert_eq!(ont.parse_label(&label.to_string()).unwrap(), label);
        }
    }

    #[test]
    fn render_examples() {
        let ont = Ontology::builtin();
        assert_eq!(ont.render(RenderKind::Trigger), "Indication | Lesion | Medical_Problem");
        assert!(ont
            .render(RenderKind::Anatomy)
            .starts_with("Neurological: Undetermined, Spine Cervical, Spine Thoracic"));
        assert!(ont
            .render(RenderKind::Joint)
            .starts_with("trigger types: Indication | Lesion | Medical_Problem anatomy categories: Neurological: "));
        assert_eq!(ont.render(RenderKind::Joint), ont.render(RenderKind::Joint));
    }

    #[test]
    fn json_loading() {
        let ont = Ontology::from_json(
            r#"{"Respiratory": ["Undetermined", "Lung"], "Lymphatic": ["Undetermined", "Node"]}"#,
        )
        .unwrap();
        assert_eq!(
            ont.render(RenderKind::Anatomy),
            "Respiratory: Undetermined, Lung; Lymphatic: Undetermined, Node"
        );
        assert!(ont.parse_label("Lymphatic | Node").is_ok());
        assert!(matches!(
            ont.parse_label("Neurological | Brain"),
            Err(OntologyError::UnknownParent(_))
        ));
        assert!(Ontology::from_json(r#"{"Respiratory": ["Lung"]}"#).is_err());
        assert!(Ontology::from_json(r#"{"Lungs": ["Undetermined"]}"#).is_err());
    }

    #[test]
    fn term_list() {
        let terms = default_term_list();
        assert!(terms.contains("Liver"));
        assert!(terms.contains("Mediastinum"));
        assert!(!terms.contains("and"));
        let intestine = terms.terms().iter().filter(|t| *t == "Intestine").count();
        assert_eq!(intestine, 1);
        assert!(TermList::new(["  "]).is_err());
        let t = TermList::new(["Liver", "liver", "LIVER", "Lung"]).unwrap();
        assert_eq!(t.terms(), &["Liver".to_string(), "Lung".to_string()]);
    }

    #[test]
    fn trigger_type_text() {
        assert_eq!(TriggerType::MedicalProblem.to_string(), "Medical_Problem");
        assert_eq!("Medical_Problem".parse::<TriggerType>().unwrap(), TriggerType::MedicalProblem);
        assert!("Medical Problem".parse::<TriggerType>().is_err());
    }
}
