//! Linear one-class SVM trained by per-sample subgradient steps.
//!
//! Objective: `0.5 ||w||^2 + (1/nu) mean_i hinge(rho - <w, x_i>) - rho`.
//! The decision function is `<w, x> - rho`; non-negative means predicted
//! inlier. The averaged variant keeps Polyak running means of `w` and `rho`
//! and uses them for decisions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{dot, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOcSvm {
    pub nu: f64,
    pub averaged: bool,
    pub eta0: f64,
    weights: Vec<f64>,
    rho: f64,
    avg_weights: Vec<f64>,
    avg_rho: f64,
    /// Update count driving the learning-rate schedule.
    t: u64,
}

impl LinearOcSvm {
    pub fn new(nu: f64, averaged: bool, eta0: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must be in (0, 1], got {nu}"
            )));
        }
        if !(eta0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial learning rate must be positive, got {eta0}"
            )));
        }
        Ok(LinearOcSvm {
            nu,
            averaged,
            eta0,
            weights: Vec::new(),
            rho: 0.0,
            avg_weights: Vec::new(),
            avg_rho: 0.0,
            t: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.t
    }

    /// One subgradient step per sample, in row order. The feature width is
    /// fixed by the first batch.
    pub fn partial_fit(&mut self, batch: &Matrix) -> Result<()> {
        if batch.rows() == 0 {
            return Ok(());
        }
        if self.weights.is_empty() {
            self.weights = vec![0.0; batch.cols()];
            self.avg_weights = vec![0.0; batch.cols()];
        } else if batch.cols() != self.weights.len() {
            return Err(Error::Shape(format!(
                "svm fitted on {} dims, batch has {}",
                self.weights.len(),
                batch.cols()
            )));
        }

        let lambda = self.nu / 2.0;
        let inv_nu = 1.0 / self.nu;
        for row in batch.iter_rows() {
            self.t += 1;
            let eta = self.eta0 / (1.0 + self.eta0 * lambda * self.t as f64);
            let margin = dot(&self.weights, row);
            let active = margin < self.rho;

            // d/dw = w - (1/nu) x [active]; d/drho = (1/nu)[active] - 1.
            for (w, x) in self.weights.iter_mut().zip(row) {
                let grad = *w - if active { inv_nu * x } else { 0.0 };
                *w -= eta * grad;
            }
            self.rho -= eta * (if active { inv_nu } else { 0.0 } - 1.0);

            let k = 1.0 / self.t as f64;
            for (avg, w) in self.avg_weights.iter_mut().zip(&self.weights) {
                *avg += (w - *avg) * k;
            }
            self.avg_rho += (self.rho - self.avg_rho) * k;
        }
        Ok(())
    }

    fn effective(&self) -> (&[f64], f64) {
        if self.averaged {
            (&self.avg_weights, self.avg_rho)
        } else {
            (&self.weights, self.rho)
        }
    }

    /// `<w, x> - rho`; before any update this is `-rho` (zero) everywhere.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let (w, rho) = self.effective();
        if w.is_empty() {
            return -rho;
        }
        dot(w, x) - rho
    }

    pub fn decision_batch(&self, batch: &Matrix) -> Vec<f64> {
        batch.iter_rows().map(|r| self.decision(r)).collect()
    }

    /// Full-data objective at the current (non-averaged) iterate.
    pub fn objective(&self, data: &Matrix) -> f64 {
        let w_norm: f64 = self.weights.iter().map(|w| w * w).sum();
        let hinge_mean: f64 = data
            .iter_rows()
            .map(|row| (self.rho - dot(&self.weights, row)).max(0.0))
            .sum::<f64>()
            / data.rows() as f64;
        0.5 * w_norm + hinge_mean / self.nu - self.rho
    }
}
