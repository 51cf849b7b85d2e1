use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::score;
use crate::classify::{ClassifierSpec, FeatureMatrix, TrainedClassifier};
use crate::corpus::{kfold_split, CvConfig, Dataset, LabelMap};
use crate::embed::EmbedConfig;
use crate::error::{Error, Result};
use crate::pipeline::{Representation, Vectorizer};
use crate::text::VectorizerConfig;

/// Everything a cross-validation run needs besides the classifier.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalConfig {
    pub cv: CvConfig,
    pub vectorizer: VectorizerConfig,
    pub embedding: EmbedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold_index: usize,
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    /// Vectorizer fit plus classifier fit, in seconds.
    pub train_time_s: f64,
}

/// One fold with its vectorizer fitted on the training slice only.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub fold_index: usize,
    pub vectorizer: Vectorizer,
    pub vectorizer_time: Duration,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub y_train: Vec<usize>,
    pub y_test: Vec<usize>,
}

/// Folds of one representation, reusable across classifiers.
#[derive(Debug, Clone)]
pub struct PreparedFolds {
    pub representation: Representation,
    pub n_classes: usize,
    pub folds: Vec<PreparedFold>,
}

/// Splits the dataset, checks every training slice covers all classes and
/// fits one vectorizer per fold.
pub fn prepare_folds(
    dataset: &Dataset,
    representation: Representation,
    config: &EvalConfig,
) -> Result<PreparedFolds> {
    config.cv.validate(dataset.len())?;
    config.vectorizer.validate()?;
    config.embedding.validate()?;
    let labels = LabelMap::from_dataset(dataset);
    if labels.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "cross-validation needs at least 2 classes, found {}",
            labels.len()
        )));
    }
    let y = labels.encode(dataset)?;
    let docs: Vec<&str> = dataset.descriptions().collect();
    let folds = kfold_split(dataset.len(), &config.cv)?;

    for (index, fold) in folds.iter().enumerate() {
        let mut seen = vec![false; labels.len()];
        for &i in &fold.train {
            seen[y[i]] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::ClassMissingInTraining {
                fold: index,
                label: labels.label(missing).unwrap_or_default().to_string(),
            });
        }
    }

    let prepared = folds
        .into_par_iter()
        .enumerate()
        .map(|(fold_index, fold)| {
            let train_docs: Vec<&str> = fold.train.iter().map(|&i| docs[i]).collect();
            let test_docs: Vec<&str> = fold.test.iter().map(|&i| docs[i]).collect();
            let started = Instant::now();
            let vectorizer = Vectorizer::fit(
                representation,
                &train_docs,
                &config.vectorizer,
                &config.embedding,
            )?;
            let train = vectorizer.training_features(&train_docs)?;
            let vectorizer_time = started.elapsed();
            let test = vectorizer.transform_all(&test_docs)?;
            Ok(PreparedFold {
                fold_index,
                vectorizer,
                vectorizer_time,
                train,
                test,
                y_train: fold.train.iter().map(|&i| y[i]).collect(),
                y_test: fold.test.iter().map(|&i| y[i]).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedFolds {
        representation,
        n_classes: labels.len(),
        folds: prepared,
    })
}

/// Fits and scores one classifier on already vectorized folds. Training time
/// is the fold's vectorizer time plus this classifier's fit.
pub fn evaluate_folds(prepared: &PreparedFolds, spec: &ClassifierSpec) -> Result<Vec<FoldMetrics>> {
    prepared
        .folds
        .iter()
        .map(|fold| {
            let started = Instant::now();
            let model =
                TrainedClassifier::fit(spec, &fold.train, &fold.y_train, prepared.n_classes)?;
            let fit_time = started.elapsed();
            let predicted = model.predict_all(&fold.test)?;
            let s = score(&fold.y_test, &predicted, prepared.n_classes)?;
            Ok(FoldMetrics {
                fold_index: fold.fold_index,
                accuracy: s.accuracy,
                precision_macro: s.precision_macro,
                recall_macro: s.recall_macro,
                f1_macro: s.f1_macro,
                train_time_s: (fold.vectorizer_time + fit_time).as_secs_f64(),
            })
        })
        .collect()
}

pub fn cross_validate(
    dataset: &Dataset,
    representation: Representation,
    spec: &ClassifierSpec,
    config: &EvalConfig,
) -> Result<Vec<FoldMetrics>> {
    spec.validate()?;
    let prepared = prepare_folds(dataset, representation, config)?;
    evaluate_folds(&prepared, spec)
}
