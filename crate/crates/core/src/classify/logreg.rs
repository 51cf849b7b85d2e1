//! Multinomial (softmax) logistic regression with an L2 penalty, fitted by
//! L-BFGS.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::features::{FeatureMatrix, FeatureRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregParams {
    /// Weight of the `0.5 * ||W||^2` penalty; biases are not penalized.
    pub l2_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        LogregParams {
            l2_strength: 1.0,
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    n_classes: usize,
    dim: usize,
    /// Row-major `n_classes x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub iterations: usize,
}

/// Numerically stable softmax of `scores`, in place.
pub fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    scores.iter_mut().for_each(|s| *s /= total);
}

fn scores(params: &[f64], x: FeatureRef<'_>, n_classes: usize, dim: usize, out: &mut [f64]) {
    let bias = &params[n_classes * dim..];
    for c in 0..n_classes {
        out[c] = x.dot(&params[c * dim..(c + 1) * dim]) + bias[c];
    }
}

/// Regularized negative log-likelihood and its gradient.
///
/// `params` holds the `n_classes x dim` weights row-major followed by the
/// `n_classes` biases. The objective is
/// `-sum_i ln softmax(W x_i + b)[y_i] + 0.5 * l2 * ||W||^2`.
pub fn objective(
    params: &[f64],
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    l2_strength: f64,
) -> (f64, Vec<f64>) {
    let dim = x.dim();
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let mut p = vec![0.0; n_classes];
    for (row, &label) in x.rows().zip(y) {
        scores(params, row, n_classes, dim, &mut p);
        let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + p.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss += log_norm - p[label];
        for c in 0..n_classes {
            let residual = (p[c] - log_norm).exp() - if c == label { 1.0 } else { 0.0 };
            row.add_scaled_to(residual, &mut grad[c * dim..(c + 1) * dim]);
            grad[n_classes * dim + c] += residual;
        }
    }
    let weights = &params[..n_classes * dim];
    loss += 0.5 * l2_strength * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2_strength * w;
    }
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with a backtracking Armijo line search. Returns the
/// final point and the number of iterations taken.
fn minimize<F>(mut f: F, start: Vec<f64>, max_iter: usize, tol: f64) -> (Vec<f64>, usize)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const MEMORY: usize = 10;
    let mut x = start;
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iter = 0;
    while iter < max_iter {
        if g.iter().all(|v| v.abs() <= tol) {
            break;
        }
        iter += 1;
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(yv).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        let mut step = if history.is_empty() {
            1.0 / g.iter().map(|v| v.abs()).fold(1.0, f64::max)
        } else {
            1.0
        };
        let accepted = loop {
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fc, gc) = f(&candidate);
            if fc <= fx + 1e-4 * step * slope {
                break Some((candidate, fc, gc));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((next, f_next, g_next)) = accepted else {
            break;
        };

        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let decrease = fx - f_next;
        x = next;
        g = g_next;
        let scale = fx.abs().max(f_next.abs()).max(1.0);
        fx = f_next;
        if decrease <= tol * scale {
            break;
        }
    }
    (x, iter)
}

impl LogregModel {
    pub(crate) fn fit(
        params: &LogregParams,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
    ) -> Self {
        let dim = x.dim();
        let start = vec![0.0; n_classes * (dim + 1)];
        let (theta, iterations) = minimize(
            |p| objective(p, x, y, n_classes, params.l2_strength),
            start,
            params.max_iter,
            params.tol,
        );
        LogregModel {
            n_classes,
            dim,
            weights: theta[..n_classes * dim].to_vec(),
            bias: theta[n_classes * dim..].to_vec(),
            iterations,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn decision_scores(&self, x: FeatureRef<'_>) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| x.dot(&self.weights[c * self.dim..(c + 1) * self.dim]) + self.bias[c])
            .collect()
    }

    /// Class probabilities; nonnegative and summing to one.
    pub fn predict_proba(&self, x: FeatureRef<'_>) -> Vec<f64> {
        let mut s = self.decision_scores(x);
        softmax_in_place(&mut s);
        s
    }

    pub fn predict(&self, x: FeatureRef<'_>) -> usize {
        super::argmax_first(self.decision_scores(x).into_iter())
    }
}
