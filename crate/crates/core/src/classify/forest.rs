use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};
use super::tree::{DecisionTree, MaxFeatures, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

/// Seed of tree `index`, derived from the forest seed with a SplitMix64 step
/// so that trees are independent of training order.
pub fn tree_seed(forest_seed: u64, index: usize) -> u64 {
    let mut z = forest_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    n_classes: usize,
    trees: Vec<DecisionTree>,
    seeds: Vec<u64>,
}

impl ForestModel {
    /// Trees are grown in parallel; each depends only on its own seed.
    pub(crate) fn fit(
        params: &ForestParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        let columns = x.to_columns();
        let n = y.len();
        let seeds: Vec<u64> = (0..params.n_estimators.max(1))
            .map(|i| tree_seed(params.seed, i))
            .collect();
        let trees = seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let tree_params = TreeParams {
                    min_samples_split: params.min_samples_split,
                    max_depth: params.max_depth,
                    max_features: params.max_features,
                    seed: rng.gen(),
                };
                DecisionTree::grow(&columns, y, n_classes, samples, &tree_params)
            })
            .collect();
        ForestModel {
            n_classes,
            trees,
            seeds,
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub(crate) fn trees_mut(&mut self) -> &mut Vec<DecisionTree> {
        &mut self.trees
    }

    /// Plurality vote of the trees; ties go to the lower class index.
    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        super::argmax_first(votes.iter().map(|&v| v as f64))
    }
}
