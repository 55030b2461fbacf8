//! Seeded synthetic radiology-like corpora for tests and benchmarks.
//!
//! Every generated entity text occurs exactly once in its sentence, so
//! alignment recovers gold spans exactly.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::attach_spans;
use crate::event::{validate_event, AnatomyEntity, Annotations, Corpus, Document, Event, SentenceKey};
use crate::ontology::{Ontology, TriggerType};

const TRIGGERS: &[(&str, TriggerType)] = &[
    ("nodule", TriggerType::Lesion),
    ("mass", TriggerType::Lesion),
    ("lesion", TriggerType::Lesion),
    ("opacity", TriggerType::Lesion),
    ("density", TriggerType::Lesion),
    ("cyst", TriggerType::Lesion),
    ("hypodensity", TriggerType::Lesion),
    ("effusion", TriggerType::MedicalProblem),
    ("fracture", TriggerType::MedicalProblem),
    ("atelectasis", TriggerType::MedicalProblem),
    ("thickening", TriggerType::MedicalProblem),
    ("stenosis", TriggerType::MedicalProblem),
    ("edema", TriggerType::MedicalProblem),
    ("hemorrhage", TriggerType::MedicalProblem),
    ("metastatic disease", TriggerType::Indication),
    ("lymphoma", TriggerType::Indication),
    ("suspected malignancy", TriggerType::Indication),
];

const ANATOMIES: &[(&str, &str)] = &[
    ("right upper lobe", "Respiratory | Lung"),
    ("left lower lobe", "Respiratory | Lung"),
    ("pleural space", "Respiratory | Pleural Membrane"),
    ("trachea", "Respiratory | Tracheobronchial"),
    ("liver", "Hepato-Biliary | Liver"),
    ("gallbladder", "Hepato-Biliary | Gallblader"),
    ("pancreatic head", "Hepato-Biliary | Pancreas"),
    ("common bile duct", "Hepato-Biliary | Bile Duct"),
    ("right kidney", "Urinary | Kidney"),
    ("urinary bladder", "Urinary | Urinary Bladder"),
    ("spleen", "Abdomen | Spleen"),
    ("left adrenal gland", "Abdomen | Adrenal Gland"),
    ("anterior abdominal wall", "Abdomen | Abdominal Wall"),
    ("mesentery", "Abdomen | Mesentery"),
    ("thyroid", "Head Neck | Thyroid"),
    ("nasopharynx", "Head Neck | Pharynx"),
    ("frontal lobe", "Neurological | Brain"),
    ("L4 vertebral body", "Neurological | Spine Lumbar"),
    ("aortic arch", "Cardiovascular | Arterial"),
    ("pericardium", "Cardiovascular | Pericardial Sac"),
    ("mediastinum", "Thoracic | Mediastinal"),
    ("stomach", "Digestive | Stomach"),
    ("sigmoid colon", "Digestive | Large Intestine"),
    ("prostate", "M Reproductive | Prostate"),
    ("uterus", "F Reproductive Obstetric | Uterus"),
    ("right ovary", "F Reproductive Obstetric | Ovary"),
    ("left femur", "Musculo-Skeletal | Bone and or Joint"),
    ("psoas muscle", "Musculo-Skeletal | Skeletal and or Smooth Muscle"),
    ("pelvis", "Body Regions | Pelvis"),
    ("subcutaneous fat", "Skin | Subcutaneous"),
    ("axillary nodes", "Lymphatic | Undetermined"),
    ("soft tissue", "Miscellaneous | Connective Tissue"),
];

const SIZES: &[&str] = &["", "3 mm", "1.2 cm", "18 x 17 mm", "small", "2.5 cm hypermetabolic", "subtle"];
const PREPS: &[&str] = &["in the", "involving the", "within the", "along the", "abutting the"];
const OPENERS: &[&str] = &["", "There is a", "Again seen is a", "Redemonstrated", "New"];
const QUIET: &[&str] = &[
    "No acute abnormality is identified .",
    "Otherwise unremarkable examination .",
    "Comparison is made to the prior study .",
    "Findings are stable since the previous exam .",
    "No new abnormality .",
    "Technique : helical images were obtained without contrast .",
    "FINDINGS :",
    "IMPRESSION :",
];
const EXAMS: &[&str] = &["CT CHEST", "PET CT SKULL THIGH", "MRI ABDOMEN", "CT ABDOMEN PELVIS", "MRI BRAIN"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusShape {
    pub documents: usize,
    pub sentences_per_document: usize,
    /// Fraction of sentences with at least one event, rounded to a count.
    pub finding_rate: f64,
    /// Events per finding sentence are drawn uniformly from `1..=max_triggers`.
    pub max_triggers: usize,
    /// Anatomies per sentence on average, rounded to a corpus total.
    pub anatomy_rate: f64,
    pub max_anatomies_per_event: usize,
    pub seed: u64,
}

impl Default for CorpusShape {
    /// 200 sentences, 70% with one finding, 0.8 anatomies per sentence.
    fn default() -> Self {
        CorpusShape {
            documents: 20,
            sentences_per_document: 10,
            finding_rate: 0.7,
            max_triggers: 1,
            anatomy_rate: 0.8,
            max_anatomies_per_event: 3,
            seed: 13,
        }
    }
}

/// Builds a corpus and its gold annotations (with spans) for `shape`.
pub fn annotated_corpus(shape: &CorpusShape) -> (Corpus, Annotations) {
    let ontology = Ontology::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(shape.seed);
    let n = shape.documents * shape.sentences_per_document;

    let n_findings = ((shape.finding_rate * n as f64).round() as usize).min(n);
    let mut has_finding = vec![false; n];
    has_finding[..n_findings].iter_mut().for_each(|f| *f = true);
    has_finding.shuffle(&mut rng);

    let max_triggers = shape.max_triggers.clamp(1, 4);
    let events_per: Vec<usize> = has_finding
        .iter()
        .map(|&f| if f { rng.random_range(1..=max_triggers) } else { 0 })
        .collect();
    let slots: Vec<usize> = events_per
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat_n(i, k))
        .collect();
    let cap = shape.max_anatomies_per_event.min(4);
    let mut anat_per_event = vec![0usize; slots.len()];
    let target = ((shape.anatomy_rate * n as f64).round() as usize).min(slots.len() * cap);
    for _ in 0..target {
        let open: Vec<usize> = (0..slots.len()).filter(|&e| anat_per_event[e] < cap).collect();
        if let Some(&e) = open.choose(&mut rng) {
            anat_per_event[e] += 1;
        }
    }

    let mut gold = Annotations::new();
    let mut documents = Vec::with_capacity(shape.documents);
    let mut event_cursor = 0;
    for d in 0..shape.documents {
        let id = format!("doc{d:04}");
        let mut sentences = Vec::with_capacity(shape.sentences_per_document);
        for s in 0..shape.sentences_per_document {
            let i = d * shape.sentences_per_document + s;
            let counts = &anat_per_event[event_cursor..event_cursor + events_per[i]];
            event_cursor += events_per[i];
            if counts.is_empty() {
                sentences.push(QUIET.choose(&mut rng).expect("non-empty").to_string());
                continue;
            }
            let (text, events) = finding_sentence(&mut rng, counts, ontology);
            gold.insert(SentenceKey::new(&id, s), events);
            sentences.push(text);
        }
        documents.push(Document {
            id,
            exam_type: EXAMS.choose(&mut rng).expect("non-empty").to_string(),
            sentences,
        });
    }
    (Corpus::new(documents), gold)
}

fn finding_sentence(rng: &mut ChaCha8Rng, anatomy_counts: &[usize], ontology: &Ontology) -> (String, Vec<Event>) {
    loop {
        let triggers: Vec<&(&str, TriggerType)> = TRIGGERS.choose_multiple(rng, anatomy_counts.len()).collect();
        let total: usize = anatomy_counts.iter().sum();
        let mut anatomies = ANATOMIES.choose_multiple(rng, total);
        let mut clauses = Vec::new();
        let mut events = Vec::new();
        for (&&(trigger, kind), &k) in triggers.iter().zip(anatomy_counts) {
            let mut event = Event::new(trigger, kind);
            let mut words: Vec<&str> = Vec::new();
            let opener = *OPENERS.choose(rng).expect("non-empty");
            let size = *SIZES.choose(rng).expect("non-empty");
            words.extend([opener, size, trigger].into_iter().filter(|w| !w.is_empty()));
            let names: Vec<&str> = (0..k)
                .map(|_| {
                    let &(text, label) = anatomies.next().expect("enough anatomies");
                    event.anatomies.push(AnatomyEntity {
                        text: text.to_string(),
                        span: None,
                        label: Some(ontology.parse_label(label).expect("synthetic labels are valid")),
                    });
                    text
                })
                .collect();
            let tail = match names.len() {
                0 => "is noted".to_string(),
                1 => format!("{} {}", PREPS.choose(rng).expect("non-empty"), names[0]),
                _ => format!(
                    "{} {} and {}",
                    PREPS.choose(rng).expect("non-empty"),
                    names[..names.len() - 1].join(" , "),
                    names[names.len() - 1]
                ),
            };
            clauses.push(format!("{} {tail}", words.join(" ")));
            events.push(event);
        }
        let text = format!("{} .", clauses.join(" ; "));
        let texts = events
            .iter()
            .flat_map(|e| std::iter::once(&e.trigger.text).chain(e.anatomies.iter().map(|a| &a.text)));
        if texts.clone().all(|t| text.matches(t.as_str()).count() == 1) {
            let events = attach_spans(&text, &events);
            if events.iter().all(|e| validate_event(&text, e).is_empty()) {
                return (text, events);
            }
        }
    }
}

/// 100 sentences, exactly 36 of which contain a default filter term as a
/// whole word. Returns the sentences and, per sentence, whether it has a term.
///
/// The others include substring traps such as "nearby", "spinal" and "livers".
pub fn filter_fixture(seed: u64) -> Vec<(String, bool)> {
    const TERMS: &[&str] = &[
        "Liver", "lung", "SPLEEN", "kidney", "Heart", "pancreas", "bowel", "thyroid", "Brain",
        "prostate", "uterus", "bone", "pleura", "Mediastinum", "Chest", "adrenal", "neck", "eye",
    ];
    const TEMPLATES: &[&str] = &[
        "The {} appears unremarkable today .",
        "Mild changes of the {} are again noted .",
        "{}: no focal abnormality seen .",
        "Evaluation of the {} is limited by motion .",
    ];
    const OPENERS: &[&str] = &[
        "No acute", "Clearly stable", "Nearby structures", "Earlier study", "Spinal canal",
        "Cardiology consult", "Livers of", "Bowels and",
    ];
    const ENDINGS: &[&str] = &[
        "findings are present today .",
        "appear within normal limits .",
        "were reviewed with the radiologist .",
        "remain unchanged since the prior exam .",
        "show no interval change .",
        "is described in the clinical history .",
        "noted on the previous report .",
        "without significant abnormality .",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(String, bool)> = (0..36)
        .map(|i| {
            let term = TERMS[i % TERMS.len()];
            let template = TEMPLATES[(i / TERMS.len() + i) % TEMPLATES.len()];
            (template.replace("{}", term), true)
        })
        .collect();
    for o in OPENERS {
        for e in ENDINGS {
            out.push((format!("{o} {e}"), false));
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Unlabeled sentences for retrieval pools and throughput runs.
pub fn sentence_pool(count: usize, seed: u64) -> Vec<String> {
    let shape = CorpusShape {
        documents: count.div_ceil(10).max(1),
        sentences_per_document: 10,
        finding_rate: 0.8,
        max_triggers: 2,
        anatomy_rate: 1.0,
        seed,
        ..CorpusShape::default()
    };
    let (corpus, _) = annotated_corpus(&shape);
    corpus.sentences().take(count).map(|s| s.text.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_is_exact() {
        let (corpus, gold) = annotated_corpus(&CorpusShape::default());
        assert_eq!(corpus.sentence_count(), 200);
        let with_events = gold.values().filter(|e| !e.is_empty()).count();
        assert_eq!(with_events, 140);
        let triggers: usize = gold.values().map(Vec::len).sum();
        assert_eq!(triggers, 140);
        let anatomies: usize = gold.values().flatten().map(|e| e.anatomies.len()).sum();
        assert_eq!(anatomies, 160);
    }

    #[test]
    fn spans_are_unique_and_valid() {
        let shape = CorpusShape {
            max_triggers: 3,
            anatomy_rate: 1.5,
            ..CorpusShape::default()
        };
        let (corpus, gold) = annotated_corpus(&shape);
        for (key, events) in &gold {
            let s = corpus.sentence(key).unwrap().text;
            for e in events {
                assert!(e.trigger.span.is_some());
                assert!(e.anatomies.iter().all(|a| a.span.is_some()));
                assert!(validate_event(s, e).is_empty());
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = annotated_corpus(&CorpusShape::default());
        let b = annotated_corpus(&CorpusShape::default());
        assert_eq!(a, b);
        assert_eq!(filter_fixture(1), filter_fixture(1));
        assert_eq!(filter_fixture(1).iter().filter(|(_, t)| *t).count(), 36);
        assert_eq!(sentence_pool(55, 2).len(), 55);
    }
}
