//! A fitted vectorizer, classifier and label map, persisted as one file.
//!
//! Container layout:
//!
//! ```text
//! magic "SOCPIPE\0" | u32 LE manifest length | manifest JSON | payloads
//! ```
//!
//! The manifest lists each payload with its offset (relative to the end of the
//! manifest), length and SHA-256 digest. Payloads are the vectorizer (TF-IDF
//! JSON or the embedding binary format) and the classifier as JSON.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{ClassifierSpec, FeatureMatrix, FeatureRef, TrainedClassifier};
use crate::corpus::{Dataset, DatasetFingerprint, LabelMap};
use crate::embed::{DenseVector, EmbedConfig, EmbeddingModel};
use crate::error::{Error, Result};
use crate::text::{SparseVector, TfidfModel, VectorizerConfig};

pub const PIPELINE_MAGIC: &[u8; 8] = b"SOCPIPE\0";
pub const PIPELINE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Tfidf,
    Doc2vec,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::Tfidf, Representation::Doc2vec];

    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::Tfidf => "tfidf",
            Representation::Doc2vec => "doc2vec",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Representation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown representation `{s}` (expected tfidf or doc2vec)"))
    }
}

/// One feature vector produced by a [`Vectorizer`].
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Sparse(SparseVector),
    Dense(DenseVector),
}

impl Features {
    pub fn as_ref(&self) -> FeatureRef<'_> {
        match self {
            Features::Sparse(v) => FeatureRef::from(v),
            Features::Dense(v) => FeatureRef::from(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vectorizer {
    Tfidf(TfidfModel),
    Embedding(EmbeddingModel),
}

impl Vectorizer {
    pub fn fit<S: AsRef<str>>(
        representation: Representation,
        docs: &[S],
        tfidf: &VectorizerConfig,
        embedding: &EmbedConfig,
    ) -> Result<Self> {
        Ok(match representation {
            Representation::Tfidf => Vectorizer::Tfidf(TfidfModel::fit(docs, tfidf)?),
            Representation::Doc2vec => Vectorizer::Embedding(EmbeddingModel::fit(docs, embedding)?),
        })
    }

    pub fn representation(&self) -> Representation {
        match self {
            Vectorizer::Tfidf(_) => Representation::Tfidf,
            Vectorizer::Embedding(_) => Representation::Doc2vec,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Vectorizer::Tfidf(m) => m.dim(),
            Vectorizer::Embedding(m) => m.dim(),
        }
    }

    /// Whether `token` is part of the fitted vocabulary.
    pub fn knows_token(&self, token: &str) -> bool {
        match self {
            Vectorizer::Tfidf(m) => m.vocabulary().index_of(token).is_some(),
            Vectorizer::Embedding(m) => m.contains_token(token),
        }
    }

    /// Vectors of unseen text: TF-IDF transform or paragraph-vector inference.
    pub fn transform(&self, text: &str) -> Features {
        match self {
            Vectorizer::Tfidf(m) => Features::Sparse(m.transform(text)),
            Vectorizer::Embedding(m) => Features::Dense(m.infer_vector(text)),
        }
    }

    pub fn transform_all<S: AsRef<str>>(&self, docs: &[S]) -> Result<FeatureMatrix> {
        match self {
            Vectorizer::Tfidf(m) => FeatureMatrix::sparse(
                m.dim(),
                docs.iter().map(|d| m.transform(d.as_ref())).collect(),
            ),
            Vectorizer::Embedding(m) => FeatureMatrix::dense(
                m.dim(),
                docs.iter().map(|d| m.infer_vector(d.as_ref())).collect(),
            ),
        }
    }

    /// Vectors of the documents the vectorizer was fitted on, in order. The
    /// embedding uses its trained document vectors rather than inference.
    pub fn training_features<S: AsRef<str>>(&self, docs: &[S]) -> Result<FeatureMatrix> {
        match self {
            Vectorizer::Tfidf(_) => self.transform_all(docs),
            Vectorizer::Embedding(m) => {
                if m.doc_count() != docs.len() {
                    return Err(Error::LengthMismatch {
                        left: m.doc_count(),
                        right: docs.len(),
                    });
                }
                FeatureMatrix::dense(
                    m.dim(),
                    (0..m.doc_count()).map(|i| m.doc_vector(i)).collect(),
                )
            }
        }
    }

    fn to_payload(&self) -> Result<Vec<u8>> {
        Ok(match self {
            Vectorizer::Tfidf(m) => m.to_json()?.into_bytes(),
            Vectorizer::Embedding(m) => m.to_bytes(),
        })
    }

    fn from_payload(representation: Representation, bytes: &[u8]) -> Result<Self> {
        Ok(match representation {
            Representation::Tfidf => {
                let text = std::str::from_utf8(bytes)
                    .map_err(|e| Error::Schema(format!("vectorizer payload: {e}")))?;
                Vectorizer::Tfidf(TfidfModel::from_json(text)?)
            }
            Representation::Doc2vec => Vectorizer::Embedding(EmbeddingModel::from_bytes(bytes)?),
        })
    }
}

/// Settings a pipeline was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub representation: Representation,
    pub vectorizer: VectorizerConfig,
    pub embedding: EmbedConfig,
    pub classifier: ClassifierSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetadata {
    pub format_version: u32,
    /// RFC 3339 UTC timestamp.
    pub created_at: String,
    /// Hex digest over the payload checksums and label map; identical models
    /// share a version regardless of when they were trained.
    pub model_version: String,
    pub config: PipelineConfig,
    pub fingerprint: DatasetFingerprint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    metadata: PipelineMetadata,
    vectorizer: Vectorizer,
    classifier: TrainedClassifier,
    labels: LabelMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PayloadEntry {
    name: String,
    offset: u64,
    length: u64,
    sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    representation: Representation,
    created_at: String,
    model_version: String,
    config: PipelineConfig,
    fingerprint: DatasetFingerprint,
    labels: LabelMap,
    payloads: Vec<PayloadEntry>,
}

const VECTORIZER_PAYLOAD: &str = "vectorizer";
const CLASSIFIER_PAYLOAD: &str = "classifier";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn model_version(payloads: &[(&str, Vec<u8>)], labels: &LabelMap) -> String {
    let mut hasher = Sha256::new();
    for (name, bytes) in payloads {
        hasher.update(name.as_bytes());
        hasher.update(sha256_hex(bytes).as_bytes());
    }
    for label in labels.labels() {
        hasher.update(label.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}

impl Pipeline {
    /// Fits the vectorizer and the classifier on the whole dataset.
    pub fn train(dataset: &Dataset, config: PipelineConfig) -> Result<Self> {
        let labels = LabelMap::from_dataset(dataset);
        let y = labels.encode(dataset)?;
        let docs: Vec<&str> = dataset.descriptions().collect();
        let vectorizer = Vectorizer::fit(
            config.representation,
            &docs,
            &config.vectorizer,
            &config.embedding,
        )?;
        let x = vectorizer.training_features(&docs)?;
        let classifier = TrainedClassifier::fit(&config.classifier, &x, &y, labels.len())?;
        let created_at = humantime::format_rfc3339_seconds(SystemTime::now()).to_string();
        Self::assemble(
            vectorizer,
            classifier,
            labels,
            config,
            dataset.fingerprint(),
            created_at,
        )
    }

    fn assemble(
        vectorizer: Vectorizer,
        classifier: TrainedClassifier,
        labels: LabelMap,
        config: PipelineConfig,
        fingerprint: DatasetFingerprint,
        created_at: String,
    ) -> Result<Self> {
        if vectorizer.dim() != classifier.dim {
            return Err(Error::Schema(format!(
                "classifier expects {} features but the vectorizer produces {}",
                classifier.dim,
                vectorizer.dim()
            )));
        }
        if labels.len() != classifier.n_classes {
            return Err(Error::Schema(format!(
                "label map has {} classes but the classifier emits {}",
                labels.len(),
                classifier.n_classes
            )));
        }
        if vectorizer.representation() != config.representation {
            return Err(Error::Schema(
                "vectorizer does not match the configured representation".into(),
            ));
        }
        let payloads = Self::payloads(&vectorizer, &classifier)?;
        let metadata = PipelineMetadata {
            format_version: PIPELINE_FORMAT_VERSION,
            created_at,
            model_version: model_version(&payloads, &labels),
            config,
            fingerprint,
        };
        Ok(Pipeline {
            metadata,
            vectorizer,
            classifier,
            labels,
        })
    }

    fn payloads(
        vectorizer: &Vectorizer,
        classifier: &TrainedClassifier,
    ) -> Result<Vec<(&'static str, Vec<u8>)>> {
        Ok(vec![
            (VECTORIZER_PAYLOAD, vectorizer.to_payload()?),
            (CLASSIFIER_PAYLOAD, serde_json::to_vec(classifier)?),
        ])
    }

    pub fn metadata(&self) -> &PipelineMetadata {
        &self.metadata
    }

    pub fn model_version(&self) -> &str {
        &self.metadata.model_version
    }

    pub fn representation(&self) -> Representation {
        self.vectorizer.representation()
    }

    pub fn vectorizer(&self) -> &Vectorizer {
        &self.vectorizer
    }

    pub fn classifier(&self) -> &TrainedClassifier {
        &self.classifier
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    /// Class index predicted for `description`. Text with no known terms maps
    /// to the zero vector and gets whatever the classifier decides there.
    pub fn predict_index(&self, description: &str) -> Result<usize> {
        if description.trim().is_empty() {
            return Err(Error::EmptyDescription);
        }
        let features = self.vectorizer.transform(description);
        self.classifier.predict(features.as_ref())
    }

    pub fn predict_one(&self, description: &str) -> Result<&str> {
        let index = self.predict_index(description)?;
        self.labels
            .label(index)
            .ok_or_else(|| Error::Schema(format!("class index {index} is not in the label map")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payloads = Self::payloads(&self.vectorizer, &self.classifier)?;
        let mut offset = 0u64;
        let entries = payloads
            .iter()
            .map(|(name, bytes)| {
                let entry = PayloadEntry {
                    name: name.to_string(),
                    offset,
                    length: bytes.len() as u64,
                    sha256: sha256_hex(bytes),
                };
                offset += bytes.len() as u64;
                entry
            })
            .collect();
        let manifest = Manifest {
            format_version: PIPELINE_FORMAT_VERSION,
            representation: self.representation(),
            created_at: self.metadata.created_at.clone(),
            model_version: self.metadata.model_version.clone(),
            config: self.metadata.config.clone(),
            fingerprint: self.metadata.fingerprint.clone(),
            labels: self.labels.clone(),
            payloads: entries,
        };
        let manifest = serde_json::to_vec(&manifest)?;
        let mut out = Vec::with_capacity(12 + manifest.len() + offset as usize);
        out.extend_from_slice(PIPELINE_MAGIC);
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        for (_, bytes) in &payloads {
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != PIPELINE_MAGIC {
            return Err(Error::Schema(
                "not a pipeline file (bad magic bytes)".into(),
            ));
        }
        let manifest_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let manifest_bytes = bytes
            .get(12..12 + manifest_len)
            .ok_or_else(|| Error::Schema("pipeline manifest is truncated".into()))?;

        // version first, so a newer file is rejected before its schema is interpreted
        let raw: serde_json::Value = serde_json::from_slice(manifest_bytes)?;
        let version = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Schema("manifest has no format_version".into()))?;
        if version != u64::from(PIPELINE_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                supported: PIPELINE_FORMAT_VERSION,
            });
        }
        let manifest: Manifest = serde_json::from_value(raw)?;

        let body = &bytes[12 + manifest_len..];
        let payload = |name: &str| -> Result<&[u8]> {
            let entry = manifest
                .payloads
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| Error::Schema(format!("manifest lists no `{name}` payload")))?;
            let data = usize::try_from(entry.offset)
                .ok()
                .zip(usize::try_from(entry.length).ok())
                .and_then(|(start, len)| body.get(start..start.checked_add(len)?));
            match data {
                Some(data) if sha256_hex(data) == entry.sha256 => Ok(data),
                _ => Err(Error::ChecksumMismatch {
                    payload: name.to_string(),
                }),
            }
        };
        let vectorizer =
            Vectorizer::from_payload(manifest.representation, payload(VECTORIZER_PAYLOAD)?)?;
        let classifier: TrainedClassifier = serde_json::from_slice(payload(CLASSIFIER_PAYLOAD)?)?;
        let pipeline = Self::assemble(
            vectorizer,
            classifier,
            manifest.labels,
            manifest.config,
            manifest.fingerprint,
            manifest.created_at,
        )?;
        if pipeline.metadata.model_version != manifest.model_version {
            return Err(Error::Schema(
                "model_version does not match the payloads".into(),
            ));
        }
        Ok(pipeline)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_pipeline(pipeline: &Pipeline, path: &Path) -> Result<()> {
    pipeline.save(path)
}

pub fn load_pipeline(path: &Path) -> Result<Pipeline> {
    Pipeline::load(path)
}
