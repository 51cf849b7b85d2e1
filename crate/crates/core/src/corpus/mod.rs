//! Labeled job-description records, label encoding, cross-validation folds
//! and a synthetic corpus generator.

mod io;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use io::{load_dataset, write_dataset, DataFormat, LoadOutcome};
pub use synth::{generate_synthetic, SynthConfig};

/// One labeled visa-petition row.
///
/// Only `job_description` is used as a model input; title, company and
/// occupation moniker are carried for traceability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    #[serde(default)]
    pub job_title: String,
    pub job_description: String,
    #[serde(default)]
    pub company_name: String,
    pub soc_code: String,
    #[serde(default)]
    pub soc_occupation: String,
}

impl Record {
    pub fn new(description: impl Into<String>, soc_code: impl Into<String>) -> Self {
        Record {
            job_title: String::new(),
            job_description: description.into(),
            company_name: String::new(),
            soc_code: soc_code.into(),
            soc_occupation: String::new(),
        }
    }

    pub(crate) fn is_valid(&self) -> bool {
        !self.job_description.trim().is_empty() && !self.soc_code.trim().is_empty()
    }
}

/// An ordered collection of records together with its label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<Record>,
    labels: BTreeSet<String>,
}

impl Dataset {
    /// Builds a dataset, rejecting records that violate the record invariants.
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if let Some(pos) = records.iter().position(|r| !r.is_valid()) {
            return Err(Error::MalformedRow {
                row: pos + 1,
                message: "empty job_description or soc_code".into(),
            });
        }
        let labels = records.iter().map(|r| r.soc_code.clone()).collect();
        Ok(Dataset { records, labels })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn descriptions(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.job_description.as_str())
    }

    /// Records at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let records: Vec<Record> = indices.iter().map(|&i| self.records[i].clone()).collect();
        let labels = records.iter().map(|r| r.soc_code.clone()).collect();
        Dataset { records, labels }
    }

    /// Per-label record counts.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.soc_code.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Size, class counts and a SHA-256 over descriptions and labels.
    pub fn fingerprint(&self) -> DatasetFingerprint {
        let mut hasher = Sha256::new();
        for r in &self.records {
            hasher.update((r.job_description.len() as u64).to_le_bytes());
            hasher.update(r.job_description.as_bytes());
            hasher.update((r.soc_code.len() as u64).to_le_bytes());
            hasher.update(r.soc_code.as_bytes());
        }
        DatasetFingerprint {
            size: self.len(),
            class_counts: self.label_counts(),
            content_hash: hex::encode(hasher.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub size: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub content_hash: String,
}

/// Keeps only records whose label is among the `k` most frequent labels.
///
/// Ties in frequency are broken by lexicographic label order. Record order
/// is preserved.
pub fn filter_top_k_labels(dataset: &Dataset, k: usize) -> Dataset {
    let counts = dataset.label_counts();
    if k >= counts.len() {
        return dataset.clone();
    }
    let mut ranked: Vec<(&String, &usize)> = counts.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let keep: BTreeSet<&str> = ranked.iter().take(k).map(|(l, _)| l.as_str()).collect();
    let records: Vec<Record> = dataset
        .records
        .iter()
        .filter(|r| keep.contains(r.soc_code.as_str()))
        .cloned()
        .collect();
    let labels = records.iter().map(|r| r.soc_code.clone()).collect();
    Dataset { records, labels }
}

/// Bijection between label text and dense indices `0..C`, in lexicographic
/// label order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelMap {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let labels: Vec<String> = set.into_iter().collect();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        LabelMap { labels, index }
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self::from_labels(dataset.labels().iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Encodes every record label of `dataset`.
    pub fn encode(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        dataset
            .records()
            .iter()
            .map(|r| {
                self.index_of(&r.soc_code).ok_or_else(|| {
                    Error::Schema(format!("label `{}` not in label map", r.soc_code))
                })
            })
            .collect()
    }
}

impl TryFrom<Vec<String>> for LabelMap {
    type Error = String;

    fn try_from(labels: Vec<String>) -> std::result::Result<Self, String> {
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err("label map must be strictly increasing".into());
        }
        Ok(LabelMap::from_labels(labels))
    }
}

impl From<LabelMap> for Vec<String> {
    fn from(map: LabelMap) -> Self {
        map.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub fold_count: usize,
    pub shuffle_seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            fold_count: 10,
            shuffle_seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.fold_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "fold_count must be at least 2, got {}",
                self.fold_count
            )));
        }
        if self.fold_count > n {
            return Err(Error::InvalidConfig(format!(
                "fold_count {} exceeds dataset size {}",
                self.fold_count, n
            )));
        }
        Ok(())
    }
}

/// Train/test index sets for one cross-validation round. Both are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` once with the configured seed and cuts the permutation
/// into `fold_count` contiguous slices whose sizes differ by at most one.
pub fn kfold_split(n: usize, cfg: &CvConfig) -> Result<Vec<Fold>> {
    cfg.validate(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    order.shuffle(&mut rng);

    let k = cfg.fold_count;
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut in_test = vec![false; n];
        for &i in &test {
            in_test[i] = true;
        }
        let train = (0..n).filter(|&i| !in_test[i]).collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}
