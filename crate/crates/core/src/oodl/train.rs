//! Detector training grid and per-layer selection.

use crate::error::{Error, Result};
use crate::metrics;
use crate::rng::derive_seed;
use crate::store::{FeatureArchive, SampleMatrix};

use super::kernel::{nystroem_fit, rff_fit};
use super::scaler::StreamingScaler;
use super::svm::LinearOcSvm;
use super::{KernelKind, KernelMap, OodlConfig, OodlModel};

const NU_GRID: [f64; 3] = [0.5, 0.1, 0.01];
const KERNEL_GRID: [KernelKind; 2] = [KernelKind::Rff, KernelKind::Nystroem];
const AVERAGE_GRID: [bool; 2] = [true, false];

/// One grid cell's configuration and validation score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateReport {
    pub nu: f64,
    pub kernel: KernelKind,
    pub averaged: bool,
    pub auroc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: OodlModel,
    /// All grid cells in evaluation order.
    pub candidates: Vec<CandidateReport>,
}

/// Train the full `nu x kernel x averaged` grid on the training features,
/// score every cell on the validation set, and keep the first strict
/// maximum. `gamma = 1 / feature_count`; each cell derives its own RNG
/// stream from `(seed, cell index)`, so the winner does not depend on
/// evaluation order.
pub fn train_detector(
    train: &SampleMatrix,
    val: &SampleMatrix,
    cfg: &OodlConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    train.validate()?;
    val.validate()?;
    if train.cols() != val.cols() {
        return Err(Error::Shape(format!(
            "train has {} feature dims, validation has {}",
            train.cols(),
            val.cols()
        )));
    }
    if train.rows() == 0 {
        return Err(Error::EmptyInput("training features".into()));
    }
    let has_id = val.z.iter().any(|&z| z == 0);
    let has_ood = val.z.iter().any(|&z| z == 1);
    if !has_id || !has_ood {
        return Err(Error::SingleClass);
    }

    let mut scaler = StreamingScaler::new();
    for batch in train.values.chunks(cfg.batch_size) {
        scaler.partial_fit(&batch)?;
    }
    let gamma = 1.0 / train.cols() as f64;

    let mut best: Option<(f64, OodlModel)> = None;
    let mut candidates = Vec::with_capacity(12);
    let mut cell_index = 0u64;
    for nu in NU_GRID {
        for kind in KERNEL_GRID {
            for averaged in AVERAGE_GRID {
                let cell_seed = derive_seed(seed, &format!("oodl/cell/{cell_index}"));
                cell_index += 1;

                let mut kernel: Option<KernelMap> = None;
                let mut svm = LinearOcSvm::new(nu, averaged, cfg.eta0)?;
                for _ in 0..cfg.epochs.max(1) {
                    for batch in train.values.chunks(cfg.batch_size) {
                        let scaled = scaler.transform(&batch)?;
                        if kernel.is_none() {
                            kernel = Some(match kind {
                                KernelKind::Rff => KernelMap::Rff(rff_fit(
                                    gamma,
                                    cfg.rff_dim,
                                    scaled.cols(),
                                    cell_seed,
                                )?),
                                KernelKind::Nystroem => KernelMap::Nystroem(nystroem_fit(
                                    gamma,
                                    cfg.nystroem_landmarks.min(scaled.rows()),
                                    &scaled,
                                    cell_seed,
                                )?),
                            });
                        }
                        let mapped = kernel.as_ref().unwrap().transform(&scaled)?;
                        svm.partial_fit(&mapped)?;
                    }
                }
                let kernel = kernel.expect("at least one training batch");

                let model = OodlModel {
                    scaler: scaler.clone(),
                    kernel,
                    svm,
                    layer: train.name.clone(),
                    validation_auroc: 0.0,
                };
                let val_scores = model.score(val)?;
                let auroc = metrics::auroc(&val_scores)?;
                candidates.push(CandidateReport {
                    nu,
                    kernel: kind,
                    averaged,
                    auroc,
                });
                let better = match &best {
                    None => true,
                    Some((best_auroc, _)) => auroc > *best_auroc,
                };
                if better {
                    let mut model = model;
                    model.validation_auroc = auroc;
                    best = Some((auroc, model));
                }
            }
        }
    }

    let (_, model) = best.expect("grid is non-empty");
    Ok(TrainOutcome { model, candidates })
}

/// Winning layer of Algorithm-2-style selection.
#[derive(Clone, Debug)]
pub struct LayerSelection {
    pub layer: String,
    pub auroc: f64,
    pub model: OodlModel,
    /// `(layer, validation auroc)` in archive order.
    pub per_layer: Vec<(String, f64)>,
}

/// Train a detector per layer and keep the first strict maximum by
/// validation AUROC, in archive key order.
pub fn select_layer(
    train_archive: &FeatureArchive,
    val_archive: &FeatureArchive,
    cfg: &OodlConfig,
    seed: u64,
) -> Result<LayerSelection> {
    if train_archive.is_empty() {
        return Err(Error::EmptyInput("feature archive".into()));
    }
    let mut best: Option<(f64, OodlModel)> = None;
    let mut per_layer = Vec::new();
    for (layer, train) in train_archive.iter() {
        let val = val_archive.get(layer).ok_or_else(|| {
            Error::InvalidParameter(format!("layer {layer:?} missing from validation archive"))
        })?;
        let layer_seed = derive_seed(seed, &format!("oodl/layer/{layer}"));
        let outcome = train_detector(train, val, cfg, layer_seed)?;
        let auroc = outcome.model.validation_auroc;
        per_layer.push((layer.to_string(), auroc));
        let better = match &best {
            None => true,
            Some((best_auroc, _)) => auroc > *best_auroc,
        };
        if better {
            best = Some((auroc, outcome.model));
        }
    }
    let (auroc, model) = best.expect("archive is non-empty");
    Ok(LayerSelection {
        layer: model.layer.clone(),
        auroc,
        model,
        per_layer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refdata::{gen_gaussians, GaussianSpec};
    use crate::store::Matrix;

    fn fixture() -> (SampleMatrix, SampleMatrix) {
        let spec = GaussianSpec {
            seed: 21,
            dim: 2,
            n_train: 600,
            n_val_id: 200,
            n_val_ood: 120,
            id_mean: 0.0,
            ood_mean: 6.0,
            sigma: 1.0,
        };
        gen_gaussians(&spec).unwrap()
    }

    fn small_cfg() -> OodlConfig {
        OodlConfig {
            epochs: 3,
            batch_size: 128,
            rff_dim: 128,
            nystroem_landmarks: 48,
            eta0: 0.01,
        }
    }

    #[test]
    fn grid_trains_twelve_candidates_and_separates_the_fixture() {
        let (train, val) = fixture();
        let outcome = train_detector(&train, &val, &small_cfg(), 77).unwrap();
        assert_eq!(outcome.candidates.len(), 12);
        assert!(
            outcome.model.validation_auroc >= 0.95,
            "auroc {}",
            outcome.model.validation_auroc
        );
        // Loop order: nu outermost, then kernel, then averaged=true first.
        assert_eq!(outcome.candidates[0].nu, 0.5);
        assert_eq!(outcome.candidates[0].kernel, KernelKind::Rff);
        assert!(outcome.candidates[0].averaged);
        assert_eq!(outcome.candidates[1].averaged, false);
        assert_eq!(outcome.candidates[2].kernel, KernelKind::Nystroem);
        assert_eq!(outcome.candidates[4].nu, 0.1);
    }

    #[test]
    fn training_is_deterministic_for_a_seed() {
        let (train, val) = fixture();
        let a = train_detector(&train, &val, &small_cfg(), 5).unwrap();
        let b = train_detector(&train, &val, &small_cfg(), 5).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.candidates, b.candidates);
    }

    #[test]
    fn tie_keeps_first_candidate_in_loop_order() {
        // Constant features make every cell score identically; the winner
        // must be the very first cell by the strict > rule.
        let train = SampleMatrix::new(
            "flat",
            Matrix::from_rows(vec![vec![1.0, 1.0]; 40]).unwrap(),
            (0..40).map(|i| format!("t{i}")).collect(),
            vec![0; 40],
        )
        .unwrap();
        let val = SampleMatrix::new(
            "flat",
            Matrix::from_rows(vec![vec![1.0, 1.0]; 10]).unwrap(),
            (0..10).map(|i| format!("v{i}")).collect(),
            (0..10).map(|i| u8::from(i >= 5)).collect(),
        )
        .unwrap();
        let outcome = train_detector(&train, &val, &small_cfg(), 3).unwrap();
        let first = outcome.candidates[0];
        assert!(outcome
            .candidates
            .iter()
            .all(|c| (c.auroc - first.auroc).abs() < 1e-12));
        assert_eq!(outcome.model.svm.nu, first.nu);
        assert_eq!(outcome.model.kernel.kind(), first.kernel);
        assert_eq!(outcome.model.svm.averaged, first.averaged);
    }

    #[test]
    fn degenerate_validation_rejected() {
        let (train, mut val) = fixture();
        for z in &mut val.z {
            *z = 0;
        }
        assert!(matches!(
            train_detector(&train, &val, &small_cfg(), 1),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn layer_selection_prefers_the_separable_layer() {
        let (train_good, val_good) = fixture();
        let noise_spec = GaussianSpec {
            seed: 22,
            dim: 2,
            n_train: 600,
            n_val_id: 200,
            n_val_ood: 120,
            id_mean: 0.0,
            ood_mean: 0.0, // indistinguishable
            sigma: 1.0,
        };
        let (train_noise, val_noise) = gen_gaussians(&noise_spec).unwrap();

        let mut train_archive = FeatureArchive::new();
        let mut val_archive = FeatureArchive::new();
        let renamed = |mut m: SampleMatrix, name: &str| {
            m.name = name.to_string();
            m
        };
        train_archive.push(renamed(train_noise.clone(), "layer_a")).unwrap();
        train_archive.push(renamed(train_good.clone(), "layer_b")).unwrap();
        val_archive.push(renamed(val_noise, "layer_a")).unwrap();
        val_archive.push(renamed(val_good.clone(), "layer_b")).unwrap();

        let sel = select_layer(&train_archive, &val_archive, &small_cfg(), 13).unwrap();
        assert_eq!(sel.layer, "layer_b");
        assert!(sel.auroc >= 0.95);
        assert_eq!(sel.per_layer.len(), 2);
        assert_eq!(sel.per_layer[0].0, "layer_a");

        // Single-layer archive returns that layer.
        let mut single_train = FeatureArchive::new();
        let mut single_val = FeatureArchive::new();
        single_train.push(renamed(train_good, "only")).unwrap();
        single_val.push(renamed(val_good, "only")).unwrap();
        let sel = select_layer(&single_train, &single_val, &small_cfg(), 13).unwrap();
        assert_eq!(sel.layer, "only");
    }

    #[test]
    fn empty_archive_rejected() {
        let empty = FeatureArchive::new();
        assert!(matches!(
            select_layer(&empty, &empty, &small_cfg(), 1),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn model_json_round_trip_preserves_scores() {
        let (train, val) = fixture();
        let outcome = train_detector(&train, &val, &small_cfg(), 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        outcome.model.save(&path).unwrap();
        let back = OodlModel::load(&path).unwrap();
        assert_eq!(back, outcome.model);
        assert_eq!(
            back.score(&val).unwrap(),
            outcome.model.score(&val).unwrap()
        );
    }
}
