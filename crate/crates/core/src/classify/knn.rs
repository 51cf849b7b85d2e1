use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 3 }
    }
}

/// Brute-force k-nearest-neighbour classifier over Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    k: usize,
    n_classes: usize,
    points: FeatureMatrix,
    labels: Vec<usize>,
}

impl KnnModel {
    pub(crate) fn fit(
        params: &KnnParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        KnnModel {
            k: params.k.max(1),
            n_classes,
            points: x.clone(),
            labels: y.to_vec(),
        }
    }

    /// Indices of the `k` nearest training points, nearest first. Equal
    /// distances prefer the lower training index.
    pub fn neighbours(&self, query: FeatureRef<'_>) -> Vec<usize> {
        let k = self.k.min(self.labels.len());
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, p) in self.points.rows().enumerate() {
            let d = p.squared_distance(&query);
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            // insertion after every entry with distance <= d keeps index order on ties
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, i));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority label among the neighbours; tied votes go to the lower class.
    pub fn predict(&self, query: FeatureRef<'_>) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for i in self.neighbours(query) {
            votes[self.labels[i]] += 1;
        }
        super::argmax_first(votes.iter().map(|&v| v as f64))
    }
}
