//! Streaming per-dimension standardization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::Matrix;

const SIGMA_FLOOR: f64 = 1e-12;

/// Running mean and sum of squared deviations per dimension, merged batch by
/// batch with the pairwise update rule, so any batch split yields the same
/// statistics as one pass over the data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamingScaler {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl StreamingScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population variance per dimension.
    pub fn variance(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        self.m2.iter().map(|m| m / self.n as f64).collect()
    }

    pub fn partial_fit(&mut self, batch: &Matrix) -> Result<()> {
        if batch.rows() == 0 {
            return Ok(());
        }
        if self.n == 0 {
            self.mean = vec![0.0; batch.cols()];
            self.m2 = vec![0.0; batch.cols()];
        } else if batch.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} dims, batch has {}",
                self.mean.len(),
                batch.cols()
            )));
        }

        // Two-pass batch statistics, then the pairwise merge.
        let nb = batch.rows() as f64;
        let mut batch_mean = vec![0.0; batch.cols()];
        for row in batch.iter_rows() {
            for (m, x) in batch_mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut batch_mean {
            *m /= nb;
        }
        let mut batch_m2 = vec![0.0; batch.cols()];
        for row in batch.iter_rows() {
            for ((m2, x), mean) in batch_m2.iter_mut().zip(row).zip(&batch_mean) {
                let d = x - mean;
                *m2 += d * d;
            }
        }

        let na = self.n as f64;
        let n = na + nb;
        for j in 0..batch.cols() {
            let delta = batch_mean[j] - self.mean[j];
            self.mean[j] += delta * nb / n;
            self.m2[j] += batch_m2[j] + delta * delta * na * nb / n;
        }
        self.n += batch.rows() as u64;
        Ok(())
    }

    /// `(x - mean) / max(sigma, 1e-12)` per dimension.
    pub fn transform(&self, batch: &Matrix) -> Result<Matrix> {
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "scaler transform before any fit".into(),
            ));
        }
        if batch.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} dims, batch has {}",
                self.mean.len(),
                batch.cols()
            )));
        }
        let sigma: Vec<f64> = self
            .variance()
            .iter()
            .map(|v| v.sqrt().max(SIGMA_FLOOR))
            .collect();
        let mut out = Matrix::zeros(batch.rows(), batch.cols());
        for i in 0..batch.rows() {
            let row = batch.row(i);
            let dst = out.row_mut(i);
            for j in 0..row.len() {
                dst[j] = (row[j] - self.mean[j]) / sigma[j];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random::<f64>() * 10.0 - 5.0)
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn single_batch_equals_batch_statistics() {
        let m = Matrix::from_rows(vec![
            vec![1.0, 10.0],
            vec![2.0, 20.0],
            vec![3.0, 30.0],
            vec![4.0, 40.0],
        ])
        .unwrap();
        let mut s = StreamingScaler::new();
        s.partial_fit(&m).unwrap();
        assert!((s.mean()[0] - 2.5).abs() < 1e-12);
        assert!((s.mean()[1] - 25.0).abs() < 1e-12);
        assert!((s.variance()[0] - 1.25).abs() < 1e-12);
        assert!((s.variance()[1] - 125.0).abs() < 1e-12);
    }

    #[test]
    fn split_batches_match_one_pass() {
        let mut rng = crate::rng::derive_rng(5, "scaler/split-test");
        for _ in 0..20 {
            let full = random_matrix(&mut rng, 64, 7);
            let cut = 1 + (rng.random::<u32>() as usize) % 62;

            let mut one = StreamingScaler::new();
            one.partial_fit(&full).unwrap();
            let mut two = StreamingScaler::new();
            two.partial_fit(&full.slice_rows(0, cut)).unwrap();
            two.partial_fit(&full.slice_rows(cut, 64)).unwrap();

            assert_eq!(one.count(), two.count());
            for j in 0..7 {
                let rel_mean = (one.mean()[j] - two.mean()[j]).abs()
                    / one.mean()[j].abs().max(1.0);
                let rel_var = (one.variance()[j] - two.variance()[j]).abs()
                    / one.variance()[j].abs().max(1.0);
                assert!(rel_mean < 1e-9, "mean drifted: {rel_mean}");
                assert!(rel_var < 1e-9, "variance drifted: {rel_var}");
            }
        }
    }

    #[test]
    fn constant_column_transforms_to_zero() {
        let m = Matrix::from_rows(vec![vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let mut s = StreamingScaler::new();
        s.partial_fit(&m).unwrap();
        let t = s.transform(&m).unwrap();
        for i in 0..3 {
            assert_eq!(t.row(i)[0], 0.0);
        }
        // Standardized non-constant column has unit population variance.
        let col: Vec<f64> = (0..3).map(|i| t.row(i)[1]).collect();
        let var: f64 = col.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transform_before_fit_and_width_mismatch_error() {
        let s = StreamingScaler::new();
        let m = Matrix::zeros(2, 2);
        assert!(s.transform(&m).is_err());

        let mut s = StreamingScaler::new();
        s.partial_fit(&m).unwrap();
        assert!(s.partial_fit(&Matrix::zeros(2, 3)).is_err());
        assert!(s.transform(&Matrix::zeros(2, 3)).is_err());
    }
}
