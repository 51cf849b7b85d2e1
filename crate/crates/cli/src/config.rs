//! Optional JSON config file, merged under command-line flags.
//!
//! ```json
//! {
//!   "representation": "tfidf",
//!   "algorithm": "forest",
//!   "top_k": 20,
//!   "vectorizer": { "n_max": 3 },
//!   "embedding": { "dim": 50 },
//!   "cv": { "fold_count": 5 },
//!   "classifiers": { "forest": { "n_estimators": 50 } }
//! }
//! ```
//!
//! Every key is optional. Precedence is flags, then this file, then defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use soc_core::classify::{Algorithm, ClassifierSpec};
use soc_core::corpus::CvConfig;
use soc_core::embed::EmbedConfig;
use soc_core::pipeline::Representation;
use soc_core::text::VectorizerConfig;

use crate::args::ModelArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub representation: Option<Representation>,
    pub algorithm: Option<Algorithm>,
    pub top_k: Option<usize>,
    #[serde(default)]
    pub vectorizer: VectorizerConfig,
    #[serde(default)]
    pub embedding: EmbedConfig,
    #[serde(default)]
    pub cv: CvConfig,
    /// Hyperparameters per algorithm name.
    #[serde(default)]
    pub classifiers: BTreeMap<Algorithm, serde_json::Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Resolved component settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub vectorizer: VectorizerConfig,
    pub embedding: EmbedConfig,
    file_classifiers: BTreeMap<Algorithm, serde_json::Value>,
    overrides: ClassifierOverrides,
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassifierOverrides {
    k: Option<usize>,
    estimators: Option<usize>,
    c: Option<f64>,
    l2: Option<f64>,
    max_depth: Option<usize>,
    seed: Option<u64>,
}

pub fn resolve(file: &FileConfig, flags: &ModelArgs) -> CliResult<Resolved> {
    let mut vectorizer = file.vectorizer;
    set(&mut vectorizer.n_min, flags.ngram_min);
    set(&mut vectorizer.n_max, flags.ngram_max);
    set(&mut vectorizer.min_df, flags.min_df);
    set(&mut vectorizer.max_df, flags.max_df);
    vectorizer.validate()?;

    let mut embedding = file.embedding;
    set(&mut embedding.dim, flags.dim);
    set(&mut embedding.epochs, flags.epochs);
    set(&mut embedding.negative_samples, flags.negative);
    set(&mut embedding.min_token_count, flags.min_count);
    set(&mut embedding.seed, flags.embed_seed);
    set(&mut embedding.workers, flags.embed_workers);
    embedding.validate()?;

    Ok(Resolved {
        vectorizer,
        embedding,
        file_classifiers: file.classifiers.clone(),
        overrides: ClassifierOverrides {
            k: flags.k,
            estimators: flags.estimators,
            c: flags.c,
            l2: flags.l2,
            max_depth: flags.max_depth,
            seed: flags.seed,
        },
    })
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Resolved {
    /// Defaults, then the config file's parameters for `algorithm`, then flags.
    pub fn classifier(&self, algorithm: Algorithm) -> CliResult<ClassifierSpec> {
        let mut spec = match self.file_classifiers.get(&algorithm) {
            Some(params) => serde_json::from_value(
                serde_json::json!({ "algorithm": algorithm, "params": params }),
            )
            .map_err(|e| CliError::usage(format!("invalid config for {algorithm}: {e}")))?,
            None => ClassifierSpec::default_for(algorithm),
        };
        let o = self.overrides;
        match &mut spec {
            ClassifierSpec::Knn(p) => set(&mut p.k, o.k),
            ClassifierSpec::Logreg(p) => set(&mut p.l2_strength, o.l2),
            ClassifierSpec::LinearSvm(p) => set(&mut p.c, o.c),
            ClassifierSpec::SvcRbf(p) => set(&mut p.c, o.c),
            ClassifierSpec::Tree(p) => {
                if o.max_depth.is_some() {
                    p.max_depth = o.max_depth;
                }
            }
            ClassifierSpec::Forest(p) => {
                set(&mut p.n_estimators, o.estimators);
                if o.max_depth.is_some() {
                    p.max_depth = o.max_depth;
                }
            }
            ClassifierSpec::Gnb(_) => {}
        }
        if let Some(seed) = o.seed {
            spec = spec.with_seed(seed);
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses `tfidf:svc_rbf` style selectors.
pub fn parse_only(item: &str) -> CliResult<(Representation, Algorithm)> {
    let (rep, algo) = item.split_once(':').ok_or_else(|| {
        CliError::usage(format!(
            "--only expects REPRESENTATION:ALGORITHM, got `{item}`"
        ))
    })?;
    Ok((
        rep.parse().map_err(CliError::usage)?,
        algo.parse().map_err(CliError::usage)?,
    ))
}

pub fn cv_config(file: &FileConfig, folds: Option<usize>, seed: Option<u64>) -> CvConfig {
    let mut cv = file.cv;
    set(&mut cv.fold_count, folds);
    set(&mut cv.shuffle_seed, seed);
    cv
}
