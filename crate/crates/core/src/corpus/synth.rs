use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Record};

/// Parameters of the synthetic job-description generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub class_count: usize,
    pub docs_per_class: usize,
    pub vocab_per_class: usize,
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            class_count: 5,
            docs_per_class: 400,
            vocab_per_class: 30,
            noise_rate: 0.2,
            seed: 7,
        }
    }
}

const MIN_TOKENS: usize = 30;
const MAX_TOKENS: usize = 80;

const OCCUPATIONS: [(&str, &str); 10] = [
    ("15-1132", "Software Developers, Applications"),
    ("15-1121", "Computer Systems Analysts"),
    ("15-1133", "Software Developers, Systems Software"),
    ("13-1111", "Management Analysts"),
    ("15-1199", "Computer Occupations, All Other"),
    ("17-2072", "Electronics Engineers, Except Computer"),
    ("15-2031", "Operations Research Analysts"),
    ("11-3021", "Computer and Information Systems Managers"),
    ("13-2011", "Accountants and Auditors"),
    ("17-2141", "Mechanical Engineers"),
];

const COMPANIES: [&str; 6] = ["Acme", "Initech", "Globex", "Hooli", "Umbrella", "Stark"];

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st",
];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

/// A pronounceable pseudo-word; distinct indices give distinct words.
fn pseudo_word(mut index: usize) -> String {
    let base = ONSETS.len() * NUCLEI.len();
    let mut word = String::new();
    for _ in 0..3 {
        let syllable = index % base;
        index /= base;
        word.push_str(ONSETS[syllable / NUCLEI.len()]);
        word.push_str(NUCLEI[syllable % NUCLEI.len()]);
    }
    // words past base^3 get a numeric suffix to stay unique
    if index > 0 {
        word.push_str(&index.to_string());
    }
    word
}

fn occupation(class: usize) -> (String, String) {
    match OCCUPATIONS.get(class) {
        Some((code, name)) => (code.to_string(), name.to_string()),
        None => (
            format!("{:02}-{:04}", 19 + class / 100, 1000 + class % 100),
            format!("Synthetic Occupation {class}"),
        ),
    }
}

/// Generates a labeled corpus where each class owns a disjoint keyword
/// vocabulary. Each document has 30 to 80 tokens; a `noise_rate` share of
/// them comes from a shared noise vocabulary disjoint from every class.
pub fn generate_synthetic(cfg: &SynthConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab: Vec<Vec<String>> = (0..cfg.class_count)
        .map(|c| {
            (0..cfg.vocab_per_class)
                .map(|w| pseudo_word(c * cfg.vocab_per_class + w))
                .collect()
        })
        .collect();
    let noise_offset = cfg.class_count * cfg.vocab_per_class;
    let noise: Vec<String> = (0..cfg.vocab_per_class.max(1))
        .map(|w| pseudo_word(noise_offset + w))
        .collect();
    let noise_rate = cfg.noise_rate.clamp(0.0, 1.0);

    let mut records = Vec::with_capacity(cfg.class_count * cfg.docs_per_class);
    for doc in 0..cfg.docs_per_class {
        for (class, words) in vocab.iter().enumerate() {
            let len = rng.gen_range(MIN_TOKENS..=MAX_TOKENS);
            let noisy = (len as f64 * noise_rate).round() as usize;
            let mut tokens: Vec<&str> = (0..len)
                .map(|i| {
                    let pool = if i < noisy { &noise } else { words };
                    pool[rng.gen_range(0..pool.len())].as_str()
                })
                .collect();
            tokens.shuffle(&mut rng);
            let (code, name) = occupation(class);
            records.push(Record {
                job_title: name.clone(),
                job_description: tokens.join(" "),
                company_name: format!(
                    "{} {}",
                    COMPANIES[rng.gen_range(0..COMPANIES.len())],
                    doc % 17
                ),
                soc_code: code,
                soc_occupation: name,
            });
        }
    }
    Dataset::new(records).expect("synthetic records are non-empty")
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn counts_are_forced() {
        let d = generate_synthetic(&SynthConfig {
            class_count: 5,
            docs_per_class: 400,
            ..SynthConfig::default()
        });
        assert_eq!(d.len(), 2000);
        assert_eq!(d.labels().len(), 5);
        for r in d.records() {
            let n = r.job_description.split(' ').count();
            assert!((MIN_TOKENS..=MAX_TOKENS).contains(&n));
        }
    }

    #[test]
    fn noise_free_documents_stay_in_class_vocabulary() {
        let cfg = SynthConfig {
            class_count: 3,
            docs_per_class: 20,
            vocab_per_class: 10,
            noise_rate: 0.0,
            seed: 5,
        };
        let d = generate_synthetic(&cfg);
        let labels: Vec<String> = d.labels().iter().cloned().collect();
        for label in &labels {
            let class = (0..cfg.class_count)
                .find(|&c| &occupation(c).0 == label)
                .unwrap();
            let vocab: HashSet<String> = (0..cfg.vocab_per_class)
                .map(|w| pseudo_word(class * cfg.vocab_per_class + w))
                .collect();
            for r in d.records().iter().filter(|r| &r.soc_code == label) {
                assert!(r.job_description.split(' ').all(|t| vocab.contains(t)));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::default();
        assert_eq!(generate_synthetic(&cfg), generate_synthetic(&cfg));
        let other = SynthConfig {
            seed: cfg.seed + 1,
            ..cfg
        };
        assert_ne!(generate_synthetic(&cfg), generate_synthetic(&other));
    }

    #[test]
    fn pseudo_words_are_unique() {
        let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
        assert_eq!(words.len(), 5000);
        assert!(words
            .iter()
            .all(|w| w.chars().all(|c| c.is_ascii_alphanumeric())));
    }
}
