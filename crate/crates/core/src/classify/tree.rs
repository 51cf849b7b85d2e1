//! CART classification trees grown on Gini impurity.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Columns, FeatureMatrix, FeatureRef};
use crate::error::{Error, Result};

/// `1 - sum_i p_i^2` of the class distribution given by `counts`.
pub fn gini_impurity(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

/// Number of features examined at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(dim))`
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(&self, dim: usize) -> usize {
        let m = match self {
            MaxFeatures::All => dim,
            MaxFeatures::Sqrt => (dim as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(m) => *m,
        };
        m.clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 2,
            max_depth: None,
            max_features: MaxFeatures::All,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Sample-weighted Gini impurity of the two children.
    pub impurity: f64,
}

/// Scratch buffers reused across split searches.
struct SplitSearch<'a> {
    columns: &'a Columns,
    labels: &'a [usize],
    n_classes: usize,
    pairs: Vec<(f64, usize)>,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl<'a> SplitSearch<'a> {
    fn new(columns: &'a Columns, labels: &'a [usize], n_classes: usize) -> Self {
        SplitSearch {
            columns,
            labels,
            n_classes,
            pairs: Vec::new(),
            left: vec![0; n_classes],
            right: vec![0; n_classes],
        }
    }

    /// Lowest-impurity threshold on `feature` over `samples`, if the feature
    /// takes at least two distinct values there. Thresholds are midpoints of
    /// consecutive distinct values; equal impurities keep the lower one.
    fn best_on_feature(&mut self, feature: usize, samples: &[usize]) -> Option<Split> {
        let column = self.columns.column(feature);
        self.pairs.clear();
        self.pairs
            .extend(samples.iter().map(|&i| (column[i], self.labels[i])));
        self.pairs
            .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = self.pairs.len();
        if n < 2 || self.pairs[0].0 == self.pairs[n - 1].0 {
            return None;
        }
        self.left.iter_mut().for_each(|c| *c = 0);
        self.right.iter_mut().for_each(|c| *c = 0);
        for &(_, l) in &self.pairs {
            self.right[l] += 1;
        }
        let mut sq_left = 0.0f64;
        let mut sq_right: f64 = self.right.iter().map(|&c| (c * c) as f64).sum();
        let mut best: Option<Split> = None;
        for k in 0..n - 1 {
            let (value, label) = self.pairs[k];
            let (l, r) = (self.left[label] as f64, self.right[label] as f64);
            sq_left += 2.0 * l + 1.0;
            sq_right -= 2.0 * r - 1.0;
            self.left[label] += 1;
            self.right[label] -= 1;
            let next = self.pairs[k + 1].0;
            if value == next {
                continue;
            }
            let (nl, nr) = ((k + 1) as f64, (n - k - 1) as f64);
            let impurity = ((nl - sq_left / nl) + (nr - sq_right / nr)) / n as f64;
            if best.is_none_or(|b| impurity < b.impurity) {
                let mut threshold = value + (next - value) / 2.0;
                if threshold >= next {
                    threshold = value;
                }
                best = Some(Split {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }

    fn node_impurity(&mut self, samples: &[usize]) -> f64 {
        self.left.iter_mut().for_each(|c| *c = 0);
        for &i in samples {
            self.left[self.labels[i]] += 1;
        }
        gini_impurity(&self.left).unwrap_or(0.0)
    }

    /// Best split over `features` (ascending order decides ties).
    fn best_among(&mut self, features: &[usize], samples: &[usize]) -> Option<Split> {
        let mut best: Option<Split> = None;
        for &f in features {
            if let Some(s) = self.best_on_feature(f, samples) {
                if best.is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in samples {
            counts[self.labels[i]] += 1;
        }
        counts
    }
}

/// The `(feature, threshold)` among `feature_subset` whose children have the
/// lowest weighted Gini impurity, or `None` when no candidate improves on the
/// node itself. Ties go to the lower feature index, then the lower threshold.
pub fn best_split(x: &FeatureMatrix, y: &[usize], feature_subset: &[usize]) -> Option<Split> {
    let n_classes = y.iter().max().map_or(1, |m| m + 1);
    let columns = x.to_columns();
    let mut search = SplitSearch::new(&columns, y, n_classes);
    let samples: Vec<usize> = (0..y.len()).collect();
    let parent = search.node_impurity(&samples);
    let mut features = feature_subset.to_vec();
    features.sort_unstable();
    features.dedup();
    search
        .best_among(&features, &samples)
        .filter(|s| s.impurity < parent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Grows a tree on the (possibly repeated) training rows `samples`.
    ///
    /// A node is split whenever it is impure, large enough and above the depth
    /// limit, and some examined feature is non-constant on it. Examined
    /// features are a fresh random subset per node; if none of them is
    /// splittable the search continues through the remaining features.
    pub(crate) fn grow(
        columns: &Columns,
        labels: &[usize],
        n_classes: usize,
        samples: Vec<usize>,
        params: &TreeParams,
    ) -> Self {
        let dim = columns.dim();
        let draw = params.max_features.resolve(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut search = SplitSearch::new(columns, labels, n_classes);
        let mut features: Vec<usize> = (0..dim).collect();
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, samples, 0usize)];
        nodes.push(Node::Leaf {
            class: 0,
            counts: Vec::new(),
        });

        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = search.class_counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_ok = params.max_depth.is_none_or(|d| depth < d);
            let mut split = None;
            if !pure && depth_ok && samples.len() >= params.min_samples_split.max(2) {
                if draw < dim {
                    features.shuffle(&mut rng);
                }
                let mut start = 0;
                while split.is_none() && start < dim {
                    let end = if start == 0 { draw } else { dim };
                    let mut chosen = features[start..end].to_vec();
                    chosen.sort_unstable();
                    split = search.best_among(&chosen, &samples);
                    start = end;
                }
            }
            match split {
                None => {
                    let class = super::argmax_first(counts.iter().map(|&c| c as f64));
                    nodes[slot] = Node::Leaf { class, counts };
                }
                Some(s) => {
                    let column = columns.column(s.feature);
                    let (left, right): (Vec<usize>, Vec<usize>) =
                        samples.into_iter().partition(|&i| column[i] <= s.threshold);
                    let (l_slot, r_slot) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf {
                        class: 0,
                        counts: Vec::new(),
                    });
                    nodes.push(Node::Leaf {
                        class: 0,
                        counts: Vec::new(),
                    });
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: l_slot,
                        right: r_slot,
                    };
                    stack.push((r_slot, right, depth + 1));
                    stack.push((l_slot, left, depth + 1));
                }
            }
        }
        DecisionTree { nodes }
    }

    pub(crate) fn fit(
        params: &TreeParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        let columns = x.to_columns();
        Self::grow(&columns, y, n_classes, (0..y.len()).collect(), params)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5, 5]).unwrap(), 0.5);
        assert!((gini_impurity(&[1, 2, 3]).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(gini_impurity(&[0, 0]).is_err());
    }

    #[test]
    fn split_between_clusters() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0], vec![2.0], vec![8.0], vec![9.0]]).unwrap();
        let s = best_split(&x, &[0, 0, 1, 1], &[0]).unwrap();
        assert_eq!((s.feature, s.threshold, s.impurity), (0, 5.0, 0.0));
    }

    #[test]
    fn no_split_for_pure_or_constant() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0, 3.0], vec![2.0, 3.0]]).unwrap();
        assert!(best_split(&x, &[1, 1], &[0, 1]).is_none());
        assert!(best_split(&x, &[0, 1], &[1]).is_none());
    }

    #[test]
    fn ties_prefer_lower_feature() {
        // features 0 and 2 separate perfectly, feature 1 does not
        let x = FeatureMatrix::from_rows(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
        ])
        .unwrap();
        let s = best_split(&x, &[0, 0, 1, 1], &[2, 1, 0]).unwrap();
        assert_eq!(s.feature, 0);
        let s = best_split(&x, &[0, 0, 1, 1], &[2, 1]).unwrap();
        assert_eq!(s.feature, 2);
    }

    #[test]
    fn xor_is_learned_despite_zero_gain_root() {
        let x = FeatureMatrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let y = [0, 1, 1, 0];
        assert!(best_split(&x, &y, &[0, 1]).is_none());
        let tree = DecisionTree::fit(&TreeParams::default(), &x, &y, 2);
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(tree.predict(x.row(i)), label);
        }
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(150), 13);
        assert_eq!(MaxFeatures::Sqrt.resolve(100), 10);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
        assert_eq!(MaxFeatures::Count(50).resolve(7), 7);
    }

    #[test]
    fn depth_limit_is_respected() {
        let rows: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let x = FeatureMatrix::from_rows(rows).unwrap();
        let params = TreeParams {
            max_depth: Some(2),
            ..TreeParams::default()
        };
        assert!(DecisionTree::fit(&params, &x, &y, 2).depth() <= 2);
        assert_eq!(
            DecisionTree::fit(&TreeParams::default(), &x, &y, 2).depth(),
            15
        );
    }
}
