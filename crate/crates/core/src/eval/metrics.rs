use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if n_classes == 0 {
        return Err(Error::InvalidConfig(
            "metrics need at least one class".into(),
        ));
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&l| l >= n_classes) {
        return Err(Error::Schema(format!(
            "label index {bad} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

/// Row-major `n_classes x n_classes` counts; rows are true labels.
pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<Vec<usize>> {
    check(y_true, y_pred, n_classes)?;
    let mut m = vec![0; n_classes * n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t * n_classes + p] += 1;
    }
    Ok(m)
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

struct PerClass {
    precision: Vec<f64>,
    recall: Vec<f64>,
}

fn per_class(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<PerClass> {
    let m = confusion_matrix(y_true, y_pred, n_classes)?;
    let mut precision = vec![0.0; n_classes];
    let mut recall = vec![0.0; n_classes];
    for c in 0..n_classes {
        let tp = m[c * n_classes + c];
        let predicted: usize = (0..n_classes).map(|t| m[t * n_classes + c]).sum();
        let actual: usize = m[c * n_classes..(c + 1) * n_classes].iter().sum();
        if predicted > 0 {
            precision[c] = tp as f64 / predicted as f64;
        } else {
            log::warn!("class {c} was never predicted; its precision counts as 0");
        }
        if actual > 0 {
            recall[c] = tp as f64 / actual as f64;
        } else {
            log::warn!("class {c} has no true instances; its recall counts as 0");
        }
    }
    Ok(PerClass { precision, recall })
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Unweighted mean of per-class precision over `0..n_classes`. Classes that
/// are never predicted contribute 0.
pub fn macro_precision(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let pc = per_class(y_true, y_pred, n_classes)?;
    Ok(mean(pc.precision.into_iter(), n_classes))
}

/// Unweighted mean of per-class recall; classes absent from `y_true`
/// contribute 0.
pub fn macro_recall(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let pc = per_class(y_true, y_pred, n_classes)?;
    Ok(mean(pc.recall.into_iter(), n_classes))
}

/// Unweighted mean of per-class F1 = 2PR/(P+R), with 0 where P+R = 0.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let pc = per_class(y_true, y_pred, n_classes)?;
    Ok(mean(
        pc.precision.iter().zip(&pc.recall).map(|(&p, &r)| f1(p, r)),
        n_classes,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

pub fn score(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Scores> {
    let accuracy = accuracy(y_true, y_pred)?;
    let pc = per_class(y_true, y_pred, n_classes)?;
    Ok(Scores {
        accuracy,
        precision_macro: mean(pc.precision.iter().copied(), n_classes),
        recall_macro: mean(pc.recall.iter().copied(), n_classes),
        f1_macro: mean(
            pc.precision.iter().zip(&pc.recall).map(|(&p, &r)| f1(p, r)),
            n_classes,
        ),
    })
}
