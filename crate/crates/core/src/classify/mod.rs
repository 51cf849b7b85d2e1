//! Seven multiclass classifiers behind one fit/predict contract.
//!
//! Labels are dense class indices `0..n_classes`. A training set containing a
//! single class yields a constant predictor for every algorithm.

mod features;
mod forest;
mod gnb;
mod knn;
mod linear_svm;
mod logreg;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use features::{Columns, FeatureMatrix, FeatureRef};
pub use forest::{tree_seed, ForestModel, ForestParams};
pub use gnb::{GnbModel, GnbParams};
pub use knn::{KnnModel, KnnParams};
pub use linear_svm::{LinearSvmModel, LinearSvmParams};
pub use logreg::{objective as logreg_objective, softmax_in_place, LogregModel, LogregParams};
pub use svm::{
    dual_objective, rbf_kernel, scale_gamma, smo_solve, Gamma, KernelMatrix, PairwiseMachine,
    SmoOptions, SmoSolution, SvcModel, SvcParams,
};
pub use tree::{best_split, gini_impurity, DecisionTree, MaxFeatures, Node, Split, TreeParams};

// NaN fails both checks.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn non_negative(x: f64) -> bool {
    x >= 0.0
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn,
    Gnb,
    Logreg,
    LinearSvm,
    SvcRbf,
    Tree,
    Forest,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Knn,
        Algorithm::Gnb,
        Algorithm::Logreg,
        Algorithm::LinearSvm,
        Algorithm::SvcRbf,
        Algorithm::Tree,
        Algorithm::Forest,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Gnb => "gnb",
            Algorithm::Logreg => "logreg",
            Algorithm::LinearSvm => "linear_svm",
            Algorithm::SvcRbf => "svc_rbf",
            Algorithm::Tree => "tree",
            Algorithm::Forest => "forest",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// An algorithm together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Knn(KnnParams),
    Gnb(GnbParams),
    Logreg(LogregParams),
    LinearSvm(LinearSvmParams),
    SvcRbf(SvcParams),
    Tree(TreeParams),
    Forest(ForestParams),
}

impl ClassifierSpec {
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Knn => ClassifierSpec::Knn(KnnParams::default()),
            Algorithm::Gnb => ClassifierSpec::Gnb(GnbParams::default()),
            Algorithm::Logreg => ClassifierSpec::Logreg(LogregParams::default()),
            Algorithm::LinearSvm => ClassifierSpec::LinearSvm(LinearSvmParams::default()),
            Algorithm::SvcRbf => ClassifierSpec::SvcRbf(SvcParams::default()),
            Algorithm::Tree => ClassifierSpec::Tree(TreeParams::default()),
            Algorithm::Forest => ClassifierSpec::Forest(ForestParams::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            ClassifierSpec::Knn(_) => Algorithm::Knn,
            ClassifierSpec::Gnb(_) => Algorithm::Gnb,
            ClassifierSpec::Logreg(_) => Algorithm::Logreg,
            ClassifierSpec::LinearSvm(_) => Algorithm::LinearSvm,
            ClassifierSpec::SvcRbf(_) => Algorithm::SvcRbf,
            ClassifierSpec::Tree(_) => Algorithm::Tree,
            ClassifierSpec::Forest(_) => Algorithm::Forest,
        }
    }

    /// Replaces the seed of the stochastic algorithms.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ClassifierSpec::LinearSvm(p) => p.seed = seed,
            ClassifierSpec::Tree(p) => p.seed = seed,
            ClassifierSpec::Forest(p) => p.seed = seed,
            _ => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self {
            ClassifierSpec::Knn(p) if p.k == 0 => bad("knn: k must be at least 1".into()),
            ClassifierSpec::Gnb(p) if !non_negative(p.var_smoothing) => {
                bad("gnb: var_smoothing must be >= 0".into())
            }
            ClassifierSpec::Logreg(p) if !non_negative(p.l2_strength) => {
                bad("logreg: l2_strength must be >= 0".into())
            }
            ClassifierSpec::LinearSvm(p) if !positive(p.c) => {
                bad(format!("linear_svm: C must be positive, got {}", p.c))
            }
            ClassifierSpec::SvcRbf(p) if !positive(p.c) => {
                bad(format!("svc_rbf: C must be positive, got {}", p.c))
            }
            ClassifierSpec::Forest(p) if p.n_estimators == 0 => {
                bad("forest: n_estimators must be at least 1".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Degenerate model for single-class training data.
    Constant {
        class: usize,
    },
    Knn(KnnModel),
    Gnb(GnbModel),
    Logreg(LogregModel),
    LinearSvm(LinearSvmModel),
    SvcRbf(SvcModel),
    Tree(DecisionTree),
    Forest(ForestModel),
}

/// A fitted classifier with its spec, input dimension and class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub spec: ClassifierSpec,
    pub dim: usize,
    pub n_classes: usize,
    pub model: Model,
}

impl TrainedClassifier {
    pub fn fit(
        spec: &ClassifierSpec,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        spec.validate()?;
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if y.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Schema(format!(
                "label index {bad} out of range for {n_classes} classes"
            )));
        }
        x.check_finite()?;
        let dim = x.dim();
        let model = if y.iter().all(|&l| l == y[0]) {
            Model::Constant { class: y[0] }
        } else {
            match spec {
                ClassifierSpec::Knn(p) => Model::Knn(KnnModel::fit(p, x, y, n_classes)),
                ClassifierSpec::Gnb(p) => Model::Gnb(GnbModel::fit(p, x, y, n_classes)),
                ClassifierSpec::Logreg(p) => Model::Logreg(LogregModel::fit(p, x, y, n_classes)),
                ClassifierSpec::LinearSvm(p) => {
                    Model::LinearSvm(LinearSvmModel::fit(p, x, y, n_classes))
                }
                ClassifierSpec::SvcRbf(p) => Model::SvcRbf(SvcModel::fit(p, x, y, n_classes)?),
                ClassifierSpec::Tree(p) => Model::Tree(DecisionTree::fit(p, x, y, n_classes)),
                ClassifierSpec::Forest(p) => Model::Forest(ForestModel::fit(p, x, y, n_classes)),
            }
        };
        Ok(TrainedClassifier {
            spec: *spec,
            dim,
            n_classes,
            model,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    pub fn predict<'a>(&self, x: impl Into<FeatureRef<'a>>) -> Result<usize> {
        let x = x.into();
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(match &self.model {
            Model::Constant { class } => *class,
            Model::Knn(m) => m.predict(x),
            Model::Gnb(m) => m.predict(x),
            Model::Logreg(m) => m.predict(x),
            Model::LinearSvm(m) => m.predict(x),
            Model::SvcRbf(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        })
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        x.rows().map(|r| self.predict(r)).collect()
    }

    /// Reverses tree order inside a forest; used to check order invariance.
    #[doc(hidden)]
    pub fn reverse_forest(&mut self) {
        if let Model::Forest(f) = &mut self.model {
            f.trees_mut().reverse();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, Vec<usize>) {
        let x = FeatureMatrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
            vec![5.0, 6.0],
            vec![0.0, 0.5],
        ])
        .unwrap();
        (x, vec![0, 0, 1, 1, 0])
    }

    #[test]
    fn knn_example_query() {
        let (x, y) = toy();
        let m = TrainedClassifier::fit(&ClassifierSpec::default_for(Algorithm::Knn), &x, &y, 2)
            .unwrap();
        assert_eq!(m.predict(&vec![0.0, 0.2]).unwrap(), 0);
    }

    #[test]
    fn single_class_gives_constant_predictor() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        for a in Algorithm::ALL {
            let m =
                TrainedClassifier::fit(&ClassifierSpec::default_for(a), &x, &[2, 2, 2], 4).unwrap();
            for q in [-100.0, 0.0, 2.5, 1e9] {
                assert_eq!(m.predict(&vec![q]).unwrap(), 2, "{a}");
            }
        }
    }

    #[test]
    fn every_algorithm_separates_the_toy_set() {
        let (x, y) = toy();
        for a in Algorithm::ALL {
            let m = TrainedClassifier::fit(&ClassifierSpec::default_for(a), &x, &y, 2).unwrap();
            assert_eq!(m.predict_all(&x).unwrap(), y, "{a}");
        }
    }

    #[test]
    fn input_errors() {
        let (x, y) = toy();
        let spec = ClassifierSpec::default_for(Algorithm::Logreg);
        assert!(matches!(
            TrainedClassifier::fit(&spec, &x, &y[..3], 2),
            Err(Error::LengthMismatch { .. })
        ));
        let bad = FeatureMatrix::from_rows(vec![vec![f64::NAN], vec![1.0]]).unwrap();
        assert!(matches!(
            TrainedClassifier::fit(&spec, &bad, &[0, 1], 2),
            Err(Error::NonFiniteFeature { row: 0, column: 0 })
        ));
        let m = TrainedClassifier::fit(&spec, &x, &y, 2).unwrap();
        assert!(matches!(
            m.predict(&vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let knn0 = ClassifierSpec::Knn(KnnParams { k: 0 });
        assert!(TrainedClassifier::fit(&knn0, &x, &y, 2).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("svm".parse::<Algorithm>().is_err());
    }

    #[test]
    fn serde_round_trip_preserves_predictions() {
        let (x, y) = toy();
        for a in Algorithm::ALL {
            let m = TrainedClassifier::fit(&ClassifierSpec::default_for(a), &x, &y, 2).unwrap();
            let json = serde_json::to_string(&m).unwrap();
            let back: TrainedClassifier = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m, "{a}");
        }
    }
}
