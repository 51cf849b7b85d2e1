use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{tokenize, SparseVector};
use crate::error::{Error, Result};

pub const TFIDF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Inclusive lower bound on the document-frequency proportion.
    pub min_df: f64,
    /// Inclusive upper bound on the document-frequency proportion.
    pub max_df: f64,
    pub lowercase: bool,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            n_min: 1,
            n_max: 10,
            min_df: 0.10,
            max_df: 0.90,
            lowercase: true,
        }
    }
}

impl VectorizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "n-gram range must satisfy 1 <= n_min <= n_max, got {}..{}",
                self.n_min, self.n_max
            )));
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !in_unit(self.min_df) || !in_unit(self.max_df) || self.min_df > self.max_df {
            return Err(Error::InvalidConfig(format!(
                "document-frequency bounds must satisfy 0 <= min_df <= max_df <= 1, got {}..{}",
                self.min_df, self.max_df
            )));
        }
        Ok(())
    }

    fn df_in_range(&self, df: usize, corpus_size: usize) -> bool {
        let p = df as f64 / corpus_size as f64;
        p >= self.min_df && p <= self.max_df
    }

    fn df_frequent(&self, df: usize, corpus_size: usize) -> bool {
        df as f64 / corpus_size as f64 >= self.min_df
    }
}

/// Retained n-grams in lexicographic order; the position of an n-gram is its
/// column index.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    ngrams: Vec<String>,
    df: Vec<usize>,
    corpus_size: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn ngrams(&self) -> &[String] {
        &self.ngrams
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.ngrams.binary_search_by(|g| g.as_str().cmp(ngram)).ok()
    }
}

/// Token-id lookup tables rebuilt from the n-gram list.
#[derive(Debug, Clone, Default)]
struct Lookup {
    tokens: HashMap<String, u32>,
    grams: HashMap<Vec<u32>, usize>,
    prefixes: HashSet<Vec<u32>>,
    longest: usize,
}

impl Lookup {
    fn build(ngrams: &[String]) -> Self {
        let mut lookup = Lookup::default();
        for (col, gram) in ngrams.iter().enumerate() {
            let ids: Vec<u32> = gram
                .split(' ')
                .map(|t| {
                    let next = lookup.tokens.len() as u32;
                    *lookup.tokens.entry(t.to_string()).or_insert(next)
                })
                .collect();
            lookup.longest = lookup.longest.max(ids.len());
            for end in 1..=ids.len() {
                lookup.prefixes.insert(ids[..end].to_vec());
            }
            lookup.grams.insert(ids, col);
        }
        lookup
    }
}

/// A fitted TF-IDF n-gram vectorizer.
#[derive(Debug, Clone)]
pub struct TfidfModel {
    config: VectorizerConfig,
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    lookup: Lookup,
}

impl PartialEq for TfidfModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.vocabulary == other.vocabulary && self.idf == other.idf
    }
}

/// Smoothed inverse document frequency.
fn smoothed_idf(df: usize, corpus_size: usize) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Builds the document-frequency-pruned n-gram vocabulary of `docs` and
    /// its IDF weights.
    pub fn fit<S: AsRef<str>>(docs: &[S], config: &VectorizerConfig) -> Result<Self> {
        config.validate()?;
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n_docs = docs.len();

        let mut token_ids: HashMap<String, u32> = HashMap::new();
        let encoded: Vec<Vec<u32>> = docs
            .iter()
            .map(|d| {
                tokenize(d.as_ref(), config.lowercase)
                    .into_iter()
                    .map(|t| {
                        let next = token_ids.len() as u32;
                        *token_ids.entry(t).or_insert(next)
                    })
                    .collect()
            })
            .collect();

        // Level-wise counting: an n-gram can only reach min_df if both of its
        // (n-1)-gram windows do, so rarer windows are never expanded.
        let mut retained: Vec<(Vec<u32>, usize)> = Vec::new();
        let mut frequent_prev: HashSet<Vec<u32>> = HashSet::new();
        for n in 1..=config.n_max {
            let mut counts: HashMap<&[u32], usize> = HashMap::new();
            let mut seen: HashSet<&[u32]> = HashSet::new();
            for doc in &encoded {
                seen.clear();
                for window in doc.windows(n) {
                    if n > 1
                        && !(frequent_prev.contains(&window[..n - 1])
                            && frequent_prev.contains(&window[1..]))
                    {
                        continue;
                    }
                    if seen.insert(window) {
                        *counts.entry(window).or_insert(0) += 1;
                    }
                }
            }
            let mut frequent = HashSet::new();
            for (gram, df) in counts {
                if n >= config.n_min && config.df_in_range(df, n_docs) {
                    retained.push((gram.to_vec(), df));
                }
                if config.df_frequent(df, n_docs) {
                    frequent.insert(gram.to_vec());
                }
            }
            if frequent.is_empty() {
                break;
            }
            frequent_prev = frequent;
        }

        if retained.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut names: Vec<&str> = vec![""; token_ids.len()];
        for (t, &id) in &token_ids {
            names[id as usize] = t;
        }
        let mut rendered: Vec<(String, usize)> = retained
            .into_iter()
            .map(|(ids, df)| {
                let text = ids
                    .iter()
                    .map(|&id| names[id as usize])
                    .collect::<Vec<_>>()
                    .join(" ");
                (text, df)
            })
            .collect();
        rendered.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let (ngrams, df): (Vec<String>, Vec<usize>) = rendered.into_iter().unzip();
        Self::from_parts(*config, ngrams, df, n_docs)
    }

    fn from_parts(
        config: VectorizerConfig,
        ngrams: Vec<String>,
        df: Vec<usize>,
        corpus_size: usize,
    ) -> Result<Self> {
        let idf = df.iter().map(|&d| smoothed_idf(d, corpus_size)).collect();
        let lookup = Lookup::build(&ngrams);
        Ok(TfidfModel {
            config,
            vocabulary: Vocabulary {
                ngrams,
                df,
                corpus_size,
            },
            idf,
            lookup,
        })
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Raw in-vocabulary n-gram counts of `text`, as (column, count) pairs
    /// sorted by column.
    pub fn term_counts(&self, text: &str) -> Vec<(usize, f64)> {
        let ids: Vec<Option<u32>> = tokenize(text, self.config.lowercase)
            .iter()
            .map(|t| self.lookup.tokens.get(t).copied())
            .collect();
        let mut counts: HashMap<usize, f64> = HashMap::new();
        let mut window: Vec<u32> = Vec::with_capacity(self.lookup.longest);
        for start in 0..ids.len() {
            window.clear();
            for id in ids[start..].iter().take(self.lookup.longest) {
                let Some(id) = id else { break };
                window.push(*id);
                if !self.lookup.prefixes.contains(&window) {
                    break;
                }
                if let Some(&col) = self.lookup.grams.get(&window) {
                    *counts.entry(col).or_insert(0.0) += 1.0;
                }
            }
        }
        let mut pairs: Vec<(usize, f64)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        pairs
    }

    /// L2-normalized TF-IDF vector of `text`. Text with no vocabulary n-gram
    /// maps to the zero vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let weighted = self
            .term_counts(text)
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]));
        let mut v = SparseVector::from_pairs(self.dim(), weighted)
            .expect("columns come from the vocabulary in sorted order");
        v.normalize();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TfidfDocument {
            format: "tfidf".into(),
            version: TFIDF_FORMAT_VERSION,
            config: self.config,
            corpus_size: self.vocabulary.corpus_size,
            ngrams: self.vocabulary.ngrams.clone(),
            df: self.vocabulary.df.clone(),
            idf: self.idf.clone(),
        })?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: TfidfDocument = serde_json::from_str(json)?;
        if doc.format != "tfidf" {
            return Err(Error::Schema(format!(
                "expected tfidf document, found `{}`",
                doc.format
            )));
        }
        if doc.version > TFIDF_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: doc.version,
                supported: TFIDF_FORMAT_VERSION,
            });
        }
        doc.config.validate()?;
        if doc.ngrams.len() != doc.df.len() || doc.ngrams.len() != doc.idf.len() {
            return Err(Error::Schema("ngrams, df and idf lengths differ".into()));
        }
        if doc.ngrams.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema("ngrams must be strictly increasing".into()));
        }
        if doc.idf.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::Schema(
                "idf weights must be finite and positive".into(),
            ));
        }
        let lookup = Lookup::build(&doc.ngrams);
        Ok(TfidfModel {
            config: doc.config,
            vocabulary: Vocabulary {
                ngrams: doc.ngrams,
                df: doc.df,
                corpus_size: doc.corpus_size,
            },
            idf: doc.idf,
            lookup,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TfidfDocument {
    format: String,
    version: u32,
    config: VectorizerConfig,
    corpus_size: usize,
    ngrams: Vec<String>,
    df: Vec<usize>,
    idf: Vec<f64>,
}
