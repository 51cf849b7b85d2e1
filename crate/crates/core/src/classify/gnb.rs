use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnbParams {
    /// Multiple of the largest per-feature variance added to every class
    /// variance.
    pub var_smoothing: f64,
}

impl Default for GnbParams {
    fn default() -> Self {
        GnbParams {
            var_smoothing: 1e-9,
        }
    }
}

/// Gaussian naive Bayes. Sparse inputs are treated densely: absent entries
/// are observations of zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    dim: usize,
    /// ln prior per class; `None` for classes absent from training.
    log_prior: Vec<Option<f64>>,
    /// Per-class feature means, row-major `n_classes x dim`.
    means: Vec<f64>,
    /// Per-class smoothed feature variances, row-major `n_classes x dim`.
    variances: Vec<f64>,
}

fn population_variances(x: &FeatureMatrix, members: &[usize], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = members.len() as f64;
    let mut mean = vec![0.0; dim];
    for &i in members {
        x.row(i).add_scaled_to(1.0, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // two-pass: sum of squared deviations, zeros included
    let mut var = vec![0.0; dim];
    for &i in members {
        let row = x.row(i);
        match row {
            FeatureRef::Dense(v) => {
                for j in 0..dim {
                    let d = v[j] - mean[j];
                    var[j] += d * d;
                }
            }
            FeatureRef::Sparse(_) => {
                let dense = row.to_dense();
                for j in 0..dim {
                    let d = dense[j] - mean[j];
                    var[j] += d * d;
                }
            }
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    (mean, var)
}

impl GnbModel {
    pub(crate) fn fit(
        params: &GnbParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        let dim = x.dim();
        let all: Vec<usize> = (0..x.len()).collect();
        let (_, total_var) = population_variances(x, &all, dim);
        let mut epsilon = params.var_smoothing * total_var.iter().cloned().fold(0.0, f64::max);
        if epsilon <= 0.0 {
            // every feature is constant; any positive floor keeps the densities finite
            epsilon = params.var_smoothing.max(f64::MIN_POSITIVE);
        }

        let mut log_prior = vec![None; n_classes];
        let mut means = vec![0.0; n_classes * dim];
        let mut variances = vec![1.0; n_classes * dim];
        for c in 0..n_classes {
            let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            log_prior[c] = Some((members.len() as f64 / y.len() as f64).ln());
            let (mean, var) = population_variances(x, &members, dim);
            means[c * dim..(c + 1) * dim].copy_from_slice(&mean);
            for (slot, v) in variances[c * dim..(c + 1) * dim].iter_mut().zip(var) {
                *slot = v + epsilon;
            }
        }
        GnbModel {
            dim,
            log_prior,
            means,
            variances,
        }
    }

    pub fn class_means(&self, class: usize) -> &[f64] {
        &self.means[class * self.dim..(class + 1) * self.dim]
    }

    pub fn class_variances(&self, class: usize) -> &[f64] {
        &self.variances[class * self.dim..(class + 1) * self.dim]
    }

    /// Unnormalized log posterior `ln P(c) + sum_j ln N(x_j; mu_cj, var_cj)`
    /// per class.
    pub fn joint_log_likelihood(&self, x: FeatureRef<'_>) -> Vec<f64> {
        let dense = x.to_dense();
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        (0..self.log_prior.len())
            .map(|c| {
                let Some(prior) = self.log_prior[c] else {
                    return f64::NEG_INFINITY;
                };
                let (mu, var) = (self.class_means(c), self.class_variances(c));
                let mut ll = prior;
                for j in 0..self.dim {
                    let d = dense[j] - mu[j];
                    ll -= 0.5 * (ln_2pi + var[j].ln()) + d * d / (2.0 * var[j]);
                }
                ll
            })
            .collect()
    }

    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        super::argmax_first(self.joint_log_likelihood(x).into_iter())
    }
}
