//! Tokenization, n-gram extraction and TF-IDF vectorization.

mod sparse;
mod tfidf;

pub use sparse::SparseVector;
pub use tfidf::{TfidfModel, VectorizerConfig, Vocabulary, TFIDF_FORMAT_VERSION};

/// Splits `text` into maximal runs of alphanumeric characters, optionally
/// lowercased. Every other character is a separator.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .collect()
}

/// All contiguous token windows of length `n_min..=n_max`, grouped by
/// increasing length and left to right within a length. Duplicates are kept.
pub fn extract_ngrams(tokens: &[String], n_min: usize, n_max: usize) -> Vec<String> {
    let mut grams = Vec::new();
    for n in n_min.max(1)..=n_max.min(tokens.len()) {
        grams.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    grams
}
