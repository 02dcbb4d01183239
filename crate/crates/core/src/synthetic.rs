//! Synthetic annotated notes for benchmarking and fuzzing.
//!
//! Notes are filler words with PHI mentions dropped into random word slots.
//! Each note has a few recurring patients and clinicians, so name chains of
//! several mentions occur naturally. Surfaces come from the surrogate
//! vocabularies themselves, which is the hardest case for span-level erasure.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::brat::{AnnotationRecord, DocumentBundle, Span};
use crate::seed::{derive_index, rng_from};
use crate::surrogate::Vocabulary;
use crate::text::char_len;

/// Mean words and entities per note in the UAB notes used for timing.
pub const BENCH_WORDS_PER_DOC: usize = 1136;
pub const BENCH_ENTITIES_PER_DOC: usize = 60;

const FILLER: &[&str] = &[
    "patient", "was", "seen", "in", "clinic", "today", "for", "follow-up", "of", "chronic", "pain", "and",
    "hypertension", "denies", "fever", "chills", "or", "shortness", "breath", "the", "exam", "is", "unremarkable",
    "plan", "continue", "current", "medications", "return", "weeks", "labs", "were", "reviewed", "with", "family",
    "history", "notable", "diabetes", "no", "acute", "distress", "abdomen", "soft", "non-tender", "lungs", "clear",
    "to", "auscultation", "bilaterally", "MRI", "showed", "mild", "degenerative", "changes", "at", "L4-L5",
];

const FUZZ_FILLER: &[&str] = &["café", "naïve", "Größe", "日本語", "ß", "\u{2014}", "µg", "🙂", "résumé", "\t", "x\u{301}"];

const CATEGORIES: &[(&str, u32)] = &[
    ("PATIENT", 20),
    ("DOCTOR", 14),
    ("DATE", 20),
    ("HOSPITAL", 6),
    ("AGE", 5),
    ("PHONE", 5),
    ("MEDICALRECORD", 7),
    ("IDNUM", 3),
    ("CITY", 4),
    ("STREET", 3),
    ("TIME", 4),
    ("EMAIL", 2),
    ("PROFESSION", 3),
    ("ORGANIZATION", 2),
    ("STATE", 2),
];

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoteShape {
    pub words_per_doc: usize,
    pub entities_per_doc: usize,
    /// Adds multi-byte filler, tabs and mentions glued to punctuation.
    pub fuzz: bool,
}

impl Default for NoteShape {
    fn default() -> Self {
        NoteShape {
            words_per_doc: BENCH_WORDS_PER_DOC,
            entities_per_doc: BENCH_ENTITIES_PER_DOC,
            fuzz: false,
        }
    }
}

struct Person {
    first: String,
    last: String,
}

fn pick<'a, R: Rng + ?Sized>(list: &'a [String], rng: &mut R, fallback: &'a str) -> &'a str {
    list.choose(rng).map_or(fallback, String::as_str)
}

fn person<R: Rng + ?Sized>(vocab: &Vocabulary, rng: &mut R) -> Person {
    Person {
        first: pick(vocab.get("FIRST_NAME"), rng, "Alex").to_string(),
        last: pick(vocab.get("LAST_NAME"), rng, "Smith").to_string(),
    }
}

fn name_form<R: Rng + ?Sized>(p: &Person, rng: &mut R) -> String {
    match rng.random_range(0..4) {
        0 | 1 => format!("{} {}", p.first, p.last),
        2 => p.last.clone(),
        _ => p.first.clone(),
    }
}

fn digits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

fn choose_category<R: Rng + ?Sized>(rng: &mut R) -> &'static str {
    let total: u32 = CATEGORIES.iter().map(|c| c.1).sum();
    let mut x = rng.random_range(0..total);
    for &(cat, w) in CATEGORIES {
        if x < w {
            return cat;
        }
        x -= w;
    }
    unreachable!("weights cover the range")
}

fn surface<R: Rng + ?Sized>(
    category: &str,
    patients: &[Person],
    doctors: &[Person],
    vocab: &Vocabulary,
    rng: &mut R,
) -> String {
    match category {
        "PATIENT" => name_form(&patients[rng.random_range(0..patients.len())], rng),
        "DOCTOR" => {
            let d = &doctors[rng.random_range(0..doctors.len())];
            if rng.random_bool(0.3) {
                format!("Dr. {}", d.last)
            } else {
                name_form(d, rng)
            }
        }
        "DATE" => {
            let (m, d, y) = (rng.random_range(1..=12), rng.random_range(1..=28), rng.random_range(1990..=2020));
            if rng.random_bool(0.6) {
                format!("{m:02}/{d:02}/{y}")
            } else {
                format!("{} {d}, {y}", MONTHS[m as usize - 1])
            }
        }
        "AGE" => rng.random_range(18..=95).to_string(),
        "PHONE" => format!("({}) {}-{}", rng.random_range(201..=989), digits(3, rng), digits(4, rng)),
        "MEDICALRECORD" => format!("MR{}", digits(7, rng)),
        "IDNUM" => digits(8, rng),
        "TIME" => format!("{}:{:02} {}", rng.random_range(1..=12), rng.random_range(0..60), if rng.random_bool(0.5) { "am" } else { "pm" }),
        "EMAIL" => {
            let p = &patients[0];
            format!(
                "{}.{}@{}",
                p.first.to_lowercase(),
                p.last.to_lowercase(),
                pick(vocab.get("EMAIL_DOMAIN"), rng, "example.org")
            )
        }
        "STREET" => format!("{} {}", rng.random_range(1..9999), pick(vocab.get("STREET"), rng, "Main Street")),
        other => pick(vocab.get(other), rng, "Springfield").to_string(),
    }
}

/// One synthetic note. Every annotation is a single continuous span whose
/// stored surface matches the text.
pub fn synthetic_note(doc_id: &str, patient_id: Option<String>, shape: &NoteShape, vocab: &Vocabulary, seed: u64) -> DocumentBundle {
    let mut rng = rng_from(seed);
    let patients: Vec<Person> = (0..rng.random_range(1..=2)).map(|_| person(vocab, &mut rng)).collect();
    let doctors: Vec<Person> = (0..rng.random_range(1..=4)).map(|_| person(vocab, &mut rng)).collect();

    let slots = shape.words_per_doc.max(shape.entities_per_doc);
    let mut is_entity = vec![false; slots];
    for i in rand::seq::index::sample(&mut rng, slots, shape.entities_per_doc) {
        is_entity[i] = true;
    }

    let mut text = String::new();
    let mut len = 0usize;
    let mut annotations = Vec::with_capacity(shape.entities_per_doc);
    for (slot, entity) in is_entity.into_iter().enumerate() {
        if slot > 0 {
            let sep = match rng.random_range(0..40) {
                0 => ".\n",
                1 | 2 => ", ",
                3 if shape.fuzz => ",",
                4 if shape.fuzz => "\n\n",
                _ => " ",
            };
            text.push_str(sep);
            len += char_len(sep);
        }
        let word = if entity {
            let cat = choose_category(&mut rng);
            let s = surface(cat, &patients, &doctors, vocab, &mut rng);
            let n = char_len(&s);
            let id = format!("T{}", annotations.len() + 1);
            annotations.push(
                AnnotationRecord::new(id, cat, vec![Span::new(len, len + n)], Some(s.clone()))
                    .expect("synthetic spans are non-empty"),
            );
            s
        } else if shape.fuzz && rng.random_bool(0.15) {
            FUZZ_FILLER.choose(&mut rng).expect("non-empty").to_string()
        } else {
            FILLER.choose(&mut rng).expect("non-empty").to_string()
        };
        len += char_len(&word);
        text.push_str(&word);
    }
    if !text.is_empty() {
        text.push('\n');
    }
    DocumentBundle {
        doc_id: doc_id.to_string(),
        patient_id,
        text: Some(text),
        annotations,
        passthrough: Vec::new(),
    }
}

/// `n_docs` notes with ids `note00001`, ... Three consecutive notes share a
/// patient id.
pub fn synthetic_corpus(n_docs: usize, shape: &NoteShape, vocab: &Vocabulary, seed: u64) -> Vec<DocumentBundle> {
    let width = n_docs.to_string().len().max(5);
    (0..n_docs)
        .map(|i| {
            synthetic_note(
                &format!("note{:0width$}", i + 1),
                Some(format!("pt{:0width$}", i / 3 + 1)),
                shape,
                vocab,
                derive_index(seed, i as u64),
            )
        })
        .collect()
}
