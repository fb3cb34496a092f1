use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column z-score statistics fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub sd: Vec<f64>,
    /// Columns whose training values are all equal; they normalize to 0.
    pub constant: Vec<bool>,
}

impl Normalizer {
    pub fn fit(train: &Matrix) -> Result<Self> {
        if train.rows() == 0 || train.cols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let n = train.rows() as f64;
        let mut mean = vec![0.0; train.cols()];
        let mut sd = vec![0.0; train.cols()];
        let mut constant = vec![false; train.cols()];
        for j in 0..train.cols() {
            let col = train.column(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            sd[j] = var.sqrt();
            constant[j] = col.iter().all(|&v| v == col[0]) || sd[j] == 0.0;
        }
        Ok(Normalizer { mean, sd, constant })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &x)| if self.constant[j] { 0.0 } else { (x - self.mean[j]) / self.sd[j] })
            .collect())
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: m.cols(),
            });
        }
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            out.row_mut(i).copy_from_slice(&self.apply(m.row(i))?);
        }
        Ok(out)
    }
}
