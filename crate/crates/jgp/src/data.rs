//! Labeled regression datasets: an input matrix, a target vector, and a
//! per-row source label (0 = real, k >= 1 = simulated source k).

use ndarray::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        x: Array2<f64>,
        y: Array1<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || x.ncols() == 0 {
            return Err(Error::Data("dataset must have at least one row and one feature".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: "target vector length".into(),
                expected: n,
                actual: y.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                context: "label vector length".into(),
                expected: n,
                actual: labels.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                context: "feature name count".into(),
                expected: x.ncols(),
                actual: feature_names.len(),
            });
        }
        Ok(Self { x, y, labels, feature_names })
    }

    /// Convenience constructor with anonymous feature names and all-real rows.
    pub fn unlabeled(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let d = x.ncols();
        let n = x.nrows();
        Self::new(x, y, vec![0; n], (0..d).map(|i| format!("x{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows selected by index, preserving order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Concatenate rows of two datasets over the same features.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "concat feature dimension".into(),
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let x = ndarray::concatenate(Axis(0), &[self.x.view(), other.x.view()])
            .expect("dims checked");
        let y = ndarray::concatenate(Axis(0), &[self.y.view(), other.y.view()])
            .expect("dims checked");
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(Self { x, y, labels, feature_names: self.feature_names.clone() })
    }

    /// Copy with every row relabeled to `label`.
    pub fn with_label(&self, label: usize) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.clone(),
            labels: vec![label; self.len()],
            feature_names: self.feature_names.clone(),
        }
    }
}
