//! One-vs-rest linear SVM trained by epoch-based Pegasos subgradient steps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSvmParams {
    pub c: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams {
            c: 1.0,
            max_epochs: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    dim: usize,
    /// Row-major `n_classes x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    /// Classes without training examples never win the argmax.
    trained: Vec<bool>,
}

/// Minimizes `lambda/2 ||(w, b)||^2 + mean_i hinge(y_i (w.x_i + b))` with
/// `lambda = 1 / (C n)` and step size `1 / (lambda t)`. The bias is an
/// extra constant feature. `w` is kept as `scale * v` so the shrink step is
/// O(1).
fn pegasos(
    x: &FeatureMatrix,
    targets: &[f64],
    params: &LinearSvmParams,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64) {
    let n = x.len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut v = vec![0.0; x.dim()];
    let mut v_bias = 0.0;
    let mut scale = 1.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..params.max_epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let margin = targets[i] * scale * (row.dot(&v) + v_bias);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                v_bias = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * targets[i] / scale;
                row.add_scaled_to(step, &mut v);
                v_bias += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                v_bias *= scale;
                scale = 1.0;
            }
        }
    }
    v.iter_mut().for_each(|w| *w *= scale);
    (v, v_bias * scale)
}

impl LinearSvmModel {
    pub(crate) fn fit(
        params: &LinearSvmParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        let dim = x.dim();
        let mut weights = vec![0.0; n_classes * dim];
        let mut bias = vec![0.0; n_classes];
        let mut trained = vec![false; n_classes];
        for c in 0..n_classes {
            if !y.contains(&c) {
                continue;
            }
            let targets: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(c as u64));
            let (w, b) = pegasos(x, &targets, params, &mut rng);
            weights[c * dim..(c + 1) * dim].copy_from_slice(&w);
            bias[c] = b;
            trained[c] = true;
        }
        LinearSvmModel {
            dim,
            weights,
            bias,
            trained,
        }
    }

    pub fn margins(&self, x: FeatureRef<'_>) -> Vec<f64> {
        (0..self.bias.len())
            .map(|c| {
                if self.trained[c] {
                    x.dot(&self.weights[c * self.dim..(c + 1) * self.dim]) + self.bias[c]
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        super::argmax_first(self.margins(x).into_iter())
    }
}
