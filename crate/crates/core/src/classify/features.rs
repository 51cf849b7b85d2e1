use serde::{Deserialize, Serialize};

use crate::embed::DenseVector;
use crate::error::{Error, Result};
use crate::text::SparseVector;

/// Homogeneous rows of either sparse or dense feature vectors sharing one
/// dimensionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMatrix {
    Sparse { dim: usize, rows: Vec<SparseVector> },
    Dense { dim: usize, rows: Vec<DenseVector> },
}

/// A borrowed feature vector.
#[derive(Debug, Clone, Copy)]
pub enum FeatureRef<'a> {
    Sparse(&'a SparseVector),
    Dense(&'a [f64]),
}

impl<'a> From<&'a SparseVector> for FeatureRef<'a> {
    fn from(v: &'a SparseVector) -> Self {
        FeatureRef::Sparse(v)
    }
}

impl<'a> From<&'a DenseVector> for FeatureRef<'a> {
    fn from(v: &'a DenseVector) -> Self {
        FeatureRef::Dense(v.values())
    }
}

impl<'a> From<&'a [f64]> for FeatureRef<'a> {
    fn from(v: &'a [f64]) -> Self {
        FeatureRef::Dense(v)
    }
}

impl<'a> From<&'a Vec<f64>> for FeatureRef<'a> {
    fn from(v: &'a Vec<f64>) -> Self {
        FeatureRef::Dense(v)
    }
}

impl FeatureRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            FeatureRef::Sparse(v) => v.dim(),
            FeatureRef::Dense(v) => v.len(),
        }
    }

    pub fn get(&self, j: usize) -> f64 {
        match self {
            FeatureRef::Sparse(v) => v.get(j),
            FeatureRef::Dense(v) => v[j],
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            FeatureRef::Sparse(v) => v.dot_dense(weights),
            FeatureRef::Dense(v) => v.iter().zip(weights).map(|(a, b)| a * b).sum(),
        }
    }

    /// `acc += scale * self`
    pub fn add_scaled_to(&self, scale: f64, acc: &mut [f64]) {
        match self {
            FeatureRef::Sparse(v) => v.iter().for_each(|(j, x)| acc[j] += scale * x),
            FeatureRef::Dense(v) => acc
                .iter_mut()
                .zip(v.iter())
                .for_each(|(a, x)| *a += scale * x),
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match self {
            FeatureRef::Sparse(v) => v.values().iter().map(|x| x * x).sum(),
            FeatureRef::Dense(v) => v.iter().map(|x| x * x).sum(),
        }
    }

    /// Squared Euclidean distance, summed in ascending coordinate order.
    pub fn squared_distance(&self, other: &FeatureRef<'_>) -> f64 {
        match (self, other) {
            (FeatureRef::Sparse(a), FeatureRef::Sparse(b)) => a.squared_distance(b),
            (FeatureRef::Dense(a), FeatureRef::Dense(b)) => {
                a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
            }
            _ => (0..self.dim())
                .map(|j| {
                    let d = self.get(j) - other.get(j);
                    d * d
                })
                .sum(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            FeatureRef::Sparse(v) => v.to_dense(),
            FeatureRef::Dense(v) => v.to_vec(),
        }
    }

    pub fn is_finite(&self) -> Option<usize> {
        match self {
            FeatureRef::Sparse(v) => v.iter().find(|(_, x)| !x.is_finite()).map(|(j, _)| j),
            FeatureRef::Dense(v) => v.iter().position(|x| !x.is_finite()),
        }
    }
}

impl FeatureMatrix {
    pub fn sparse(dim: usize, rows: Vec<SparseVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(FeatureMatrix::Sparse { dim, rows })
    }

    pub fn dense(dim: usize, rows: Vec<DenseVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(FeatureMatrix::Dense { dim, rows })
    }

    /// Dense matrix from plain rows; the dimension is taken from the first row.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::dense(dim, rows.into_iter().map(DenseVector::new).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMatrix::Sparse { dim, .. } | FeatureMatrix::Dense { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureMatrix::Sparse { rows, .. } => rows.len(),
            FeatureMatrix::Dense { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, FeatureMatrix::Sparse { .. })
    }

    pub fn row(&self, i: usize) -> FeatureRef<'_> {
        match self {
            FeatureMatrix::Sparse { rows, .. } => FeatureRef::Sparse(&rows[i]),
            FeatureMatrix::Dense { rows, .. } => FeatureRef::Dense(rows[i].values()),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = FeatureRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Sparse { dim, rows } => FeatureMatrix::Sparse {
                dim: *dim,
                rows: indices.iter().map(|&i| rows[i].clone()).collect(),
            },
            FeatureMatrix::Dense { dim, rows } => FeatureMatrix::Dense {
                dim: *dim,
                rows: indices.iter().map(|&i| rows[i].clone()).collect(),
            },
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for (row, r) in self.rows().enumerate() {
            if let Some(column) = r.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
        }
        Ok(())
    }

    /// Column-major dense copy, as used by split search.
    pub fn to_columns(&self) -> Columns {
        let (n, dim) = (self.len(), self.dim());
        let mut data = vec![0.0; n * dim];
        for (i, r) in self.rows().enumerate() {
            match r {
                FeatureRef::Sparse(v) => v.iter().for_each(|(j, x)| data[j * n + i] = x),
                FeatureRef::Dense(v) => {
                    v.iter().enumerate().for_each(|(j, &x)| data[j * n + i] = x)
                }
            }
        }
        Columns { n, dim, data }
    }
}

/// Column-major dense feature storage.
#[derive(Debug, Clone)]
pub struct Columns {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Columns {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn sparse_distance_is_bitwise_dense(
            a in prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], 12),
            b in prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], 12),
        ) {
            let (sa, sb) = (SparseVector::from_dense(&a), SparseVector::from_dense(&b));
            let sparse = FeatureRef::Sparse(&sa).squared_distance(&FeatureRef::Sparse(&sb));
            let dense = FeatureRef::Dense(&a).squared_distance(&FeatureRef::Dense(&b));
            prop_assert_eq!(sparse.to_bits(), dense.to_bits());
            prop_assert_eq!(FeatureRef::Sparse(&sa).dot(&b), FeatureRef::Dense(&a).dot(&b));
        }
    }

    #[test]
    fn columns_transpose() {
        let m =
            FeatureMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let c = m.to_columns();
        assert_eq!(c.column(0), [1.0, 3.0, 5.0]);
        assert_eq!(c.column(1), [2.0, 4.0, 6.0]);
    }

    #[test]
    fn mismatched_rows_are_rejected() {
        assert!(FeatureMatrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
