//! RBF-kernel support vector classification: an SMO dual solver and the
//! one-vs-one multiclass reduction.

use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};
use crate::error::{Error, Result};

/// `exp(-gamma * ||x - z||^2)`
pub fn rbf_kernel(x: FeatureRef<'_>, z: FeatureRef<'_>, gamma: f64) -> Result<f64> {
    if x.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: z.dim(),
        });
    }
    Ok((-gamma * x.squared_distance(&z)).exp())
}

/// A dense symmetric kernel (Gram) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_fn(n: usize, mut k: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = k(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        KernelMatrix { n, data }
    }

    pub fn rbf(x: &FeatureMatrix, gamma: f64) -> Self {
        let rows: Vec<FeatureRef<'_>> = x.rows().collect();
        Self::from_fn(rows.len(), |i, j| {
            (-gamma * rows[i].squared_distance(&rows[j])).exp()
        })
    }

    pub fn linear(x: &FeatureMatrix) -> Self {
        let dense: Vec<Vec<f64>> = x.rows().map(|r| r.to_dense()).collect();
        Self::from_fn(dense.len(), |i, j| {
            dense[i].iter().zip(&dense[j]).map(|(a, b)| a * b).sum()
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every pair update.
    pub trace: bool,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before the KKT gap fell below `tol`.
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Dual objective `sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(kernel: &KernelMatrix, y: &[f64], alphas: &[f64]) -> f64 {
    let n = kernel.order();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = kernel.row(i);
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * row[j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

const TAU: f64 = 1e-12;

/// Solves the soft-margin SVM dual
/// `max sum a - 1/2 a'Qa  s.t.  0 <= a <= C, y'a = 0`
/// by sequential minimal optimization with second-order working-set
/// selection. Stops once the maximal KKT violation is below `tol`.
pub fn smo_solve(kernel: &KernelMatrix, y: &[f64], opts: &SmoOptions) -> Result<SmoSolution> {
    let n = kernel.order();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    if opts.c.is_nan() || opts.c <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "C must be positive, got {}",
            opts.c
        )));
    }
    let c = opts.c;
    let mut alpha = vec![0.0; n];
    // gradient of the minimization form 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            let k_i = kernel.row(i);
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                g_max2 = g_max2.max(y[t] * grad[t]);
                let b = g_max + y[t] * grad[t];
                if b > 0.0 {
                    let mut a = k_i[i] + kernel.get(t, t) - 2.0 * k_i[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    if -(b * b) / a <= obj_min {
                        obj_min = -(b * b) / a;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if g_max + g_max2 < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let k_ij = kernel.get(i, j);
        let quad = (kernel.get(i, i) + kernel.get(j, j) - 2.0 * k_ij).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        let (k_i, k_j) = (kernel.row(i), kernel.row(j));
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * d_i + y[j] * k_j[t] * d_j);
        }
        if opts.trace {
            // -(1/2 a'Qa - e'a) = -1/2 sum a_t (grad_t - 1)
            trace.push(
                -0.5 * alpha
                    .iter()
                    .zip(&grad)
                    .map(|(a, g)| a * (g - 1.0))
                    .sum::<f64>(),
            );
        }
    }
    if !converged {
        log::warn!(
            "SMO stopped after {iterations} iterations without reaching tol {}",
            opts.tol
        );
    }

    // rho is the offset that sits inside every KKT interval: the mean over
    // free vectors, else the midpoint of the feasible range
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (upper + lower) / 2.0
    };

    Ok(SmoSolution {
        alphas: alpha,
        bias: -rho,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// How the RBF width is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (dim * mean per-feature variance)` of the training data.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvcParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_passes: 1_000_000,
        }
    }
}

/// Resolves [`Gamma::Scale`] against the training matrix.
pub fn scale_gamma(x: &FeatureMatrix) -> f64 {
    let (n, dim) = (x.len() as f64, x.dim());
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for r in x.rows() {
        r.add_scaled_to(1.0, &mut sum);
        match r {
            FeatureRef::Sparse(v) => v.iter().for_each(|(j, a)| sum_sq[j] += a * a),
            FeatureRef::Dense(v) => v.iter().enumerate().for_each(|(j, a)| sum_sq[j] += a * a),
        }
    }
    let mean_var = (0..dim)
        .map(|j| {
            let mean = sum[j] / n;
            (sum_sq[j] / n - mean * mean).max(0.0)
        })
        .sum::<f64>()
        / dim as f64;
    if mean_var > 0.0 {
        1.0 / (dim as f64 * mean_var)
    } else {
        1.0
    }
}

/// One binary machine separating `positive` (+1) from `negative` (-1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMachine {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: FeatureMatrix,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl PairwiseMachine {
    pub fn decision(&self, x: FeatureRef<'_>, gamma: f64) -> f64 {
        self.support_vectors
            .rows()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * (-gamma * sv.squared_distance(&x)).exp())
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    n_classes: usize,
    gamma: f64,
    machines: Vec<PairwiseMachine>,
}

impl SvcModel {
    pub(crate) fn fit(
        params: &SvcParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        let gamma = match params.gamma {
            Gamma::Scale => scale_gamma(x),
            Gamma::Value(g) if g > 0.0 => g,
            Gamma::Value(g) => {
                return Err(Error::InvalidConfig(format!(
                    "gamma must be positive, got {g}"
                )))
            }
        };
        let present: Vec<usize> = (0..n_classes).filter(|c| y.contains(c)).collect();
        let opts = SmoOptions {
            c: params.c,
            tol: params.tol,
            max_iter: params.max_passes,
            trace: false,
        };
        let mut machines = Vec::new();
        for (a_pos, &a) in present.iter().enumerate() {
            for &b in &present[a_pos + 1..] {
                let members: Vec<usize> =
                    (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let sub = x.select(&members);
                let targets: Vec<f64> = members
                    .iter()
                    .map(|&i| if y[i] == a { 1.0 } else { -1.0 })
                    .collect();
                let kernel = KernelMatrix::rbf(&sub, gamma);
                let sol = smo_solve(&kernel, &targets, &opts)?;
                let support: Vec<usize> = (0..members.len())
                    .filter(|&i| sol.alphas[i] > 0.0)
                    .collect();
                machines.push(PairwiseMachine {
                    positive: a,
                    negative: b,
                    support_vectors: sub.select(&support),
                    coefficients: support
                        .iter()
                        .map(|&i| sol.alphas[i] * targets[i])
                        .collect(),
                    bias: sol.bias,
                    converged: sol.converged,
                });
            }
        }
        Ok(SvcModel {
            n_classes,
            gamma,
            machines,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn machines(&self) -> &[PairwiseMachine] {
        &self.machines
    }

    /// One-vs-one vote; ties go to the lower class index.
    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for m in &self.machines {
            if m.decision(x, self.gamma) > 0.0 {
                votes[m.positive] += 1;
            } else {
                votes[m.negative] += 1;
            }
        }
        super::argmax_first(votes.iter().map(|&v| v as f64))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn rbf_examples() {
        let x = [0.0];
        let z = [1.0];
        assert_eq!(
            rbf_kernel((&x[..]).into(), (&x[..]).into(), 3.7).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            rbf_kernel((&x[..]).into(), (&z[..]).into(), 1.0).unwrap(),
            0.367_879_441_171_442_3,
            epsilon = 1e-15
        );
        assert!(rbf_kernel((&x[..]).into(), (&[1.0, 2.0][..]).into(), 1.0).is_err());
    }

    #[test]
    fn two_point_linear_boundary_at_zero() {
        let x = FeatureMatrix::from_rows(vec![vec![-1.0], vec![1.0]]).unwrap();
        let k = KernelMatrix::linear(&x);
        let y = [-1.0, 1.0];
        let sol = smo_solve(
            &k,
            &y,
            &SmoOptions {
                c: 1e6,
                ..Default::default()
            },
        )
        .unwrap();
        let f = |q: f64| sol.alphas[0] * y[0] * (-q) + sol.alphas[1] * y[1] * q + sol.bias;
        assert!(f(-0.5) < 0.0);
        assert!(f(0.5) > 0.0);
        assert_abs_diff_eq!(f(0.0), 0.0, epsilon = 1e-9);
        // analytic optimum: alpha = 2 / ||x1 - x2||^2 = 0.5
        assert_abs_diff_eq!(sol.alphas[0], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn conflicting_duplicates_hit_the_bound() {
        let x = FeatureMatrix::from_rows(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let k = KernelMatrix::rbf(&x, 0.5);
        let sol = smo_solve(&k, &[1.0, -1.0], &SmoOptions::default()).unwrap();
        assert_eq!(sol.alphas, [1.0, 1.0]);
        // brute force over the single free variable a = alpha_1 = alpha_2
        let best = (0..=1000)
            .map(|s| s as f64 / 1000.0)
            .max_by(|a, b| {
                let w = |a: f64| dual_objective(&k, &[1.0, -1.0], &[a, a]);
                w(*a).total_cmp(&w(*b))
            })
            .unwrap();
        assert_eq!(best, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = KernelMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.0 });
        assert!(smo_solve(&k, &[1.0], &SmoOptions::default()).is_err());
        assert!(smo_solve(
            &k,
            &[1.0, -1.0],
            &SmoOptions {
                c: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn gamma_scale_uses_mean_feature_variance() {
        // feature variances 1 and 0 -> mean 0.5, dim 2 -> gamma 1
        let x = FeatureMatrix::from_rows(vec![vec![-1.0, 4.0], vec![1.0, 4.0]]).unwrap();
        assert_abs_diff_eq!(scale_gamma(&x), 1.0, epsilon = 1e-15);
    }
}
