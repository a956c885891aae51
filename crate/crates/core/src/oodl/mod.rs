//! OODL: a one-class detector on precomputed layer features, built from a
//! streaming scaler, an RBF kernel approximation, and an SGD-trained linear
//! one-class SVM, with hyperparameter grid search and per-layer selection.

mod kernel;
mod scaler;
mod svm;
mod train;

pub use kernel::{nystroem_fit, rbf_kernel, rff_fit, NystroemMap, RandomFourierMap};
pub use scaler::StreamingScaler;
pub use svm::LinearOcSvm;
pub use train::{select_layer, train_detector, CandidateReport, LayerSelection, TrainOutcome};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorers::ScoreVector;
use crate::store::{atomic_write, Matrix, SampleMatrix};

/// Training configuration shared by every grid cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OodlConfig {
    /// Full passes over the training batches.
    pub epochs: usize,
    pub batch_size: usize,
    /// Output width of the random Fourier map.
    pub rff_dim: usize,
    /// Landmark count for the Nystroem map (capped at the first batch size).
    pub nystroem_landmarks: usize,
    pub eta0: f64,
}

impl Default for OodlConfig {
    fn default() -> Self {
        OodlConfig {
            epochs: 5,
            batch_size: 256,
            rff_dim: 256,
            nystroem_landmarks: 64,
            eta0: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rff,
    Nystroem,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Rff => "rff",
            KernelKind::Nystroem => "nystroem",
        }
    }
}

/// Fitted kernel approximation stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelMap {
    Rff(RandomFourierMap),
    Nystroem(NystroemMap),
}

impl KernelMap {
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            KernelMap::Rff(m) => m.transform(x),
            KernelMap::Nystroem(m) => m.transform(x),
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelMap::Rff(_) => KernelKind::Rff,
            KernelMap::Nystroem(_) => KernelKind::Nystroem,
        }
    }
}

/// The fitted pipeline `scaler -> kernel map -> svm`, applied strictly in
/// that order; confidence = decision value (higher means more ID).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodlModel {
    pub scaler: StreamingScaler,
    pub kernel: KernelMap,
    pub svm: LinearOcSvm,
    /// Layer the features came from.
    pub layer: String,
    pub validation_auroc: f64,
}

impl OodlModel {
    pub fn decision_batch(&self, features: &Matrix) -> Result<Vec<f64>> {
        let scaled = self.scaler.transform(features)?;
        let mapped = self.kernel.transform(&scaled)?;
        Ok(self.svm.decision_batch(&mapped))
    }

    /// Confidence scores for a feature matrix, ground truth carried through.
    pub fn score(&self, features: &SampleMatrix) -> Result<ScoreVector> {
        features.validate()?;
        let scores = self.decision_batch(&features.values)?;
        ScoreVector::new(features.sample_ids.clone(), scores, features.z.clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        atomic_write(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&raw).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
