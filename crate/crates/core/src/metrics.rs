//! OOD evaluation metrics and prediction-similarity aggregation.
//!
//! ID (z = 0) is the positive class and scores are confidences, so TPR is
//! measured over ID samples and FPR over OOD samples. AUROC uses the
//! Mann-Whitney rank form with half credit for ties, which equals pairwise
//! counting exactly and is permutation independent.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchforge::{class_similarity, ClassMapping, ClassRef, PairMetric};
use crate::error::{Error, Result};
use crate::scorers::ScoreVector;
use crate::store::atomic_write;
use crate::wordnet::Taxonomy;

/// The three benchmark metrics at the 95%-TPR operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub fpr_at_95tpr: f64,
    pub detection_error: f64,
    pub n_id: usize,
    pub n_ood: usize,
    /// Score threshold realizing the operating point.
    pub threshold: f64,
}

/// Report row labeled for the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub method: String,
    pub dataset: String,
    pub auroc: f64,
    pub fpr95: f64,
    pub det_err: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

impl EvalRecord {
    pub fn from_report(method: impl Into<String>, dataset: impl Into<String>, r: &EvalReport) -> Self {
        EvalRecord {
            method: method.into(),
            dataset: dataset.into(),
            auroc: r.auroc,
            fpr95: r.fpr_at_95tpr,
            det_err: r.detection_error,
            n_id: r.n_id,
            n_ood: r.n_ood,
        }
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

fn split_scores(scores: &ScoreVector) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let mut id = Vec::new();
    let mut ood = Vec::new();
    for (s, z) in scores.scores.iter().zip(&scores.z) {
        if *z == 0 {
            id.push(*s);
        } else {
            ood.push(*s);
        }
    }
    if id.is_empty() || ood.is_empty() {
        return Err(Error::SingleClass);
    }
    Ok((id, ood))
}

/// Probability that a random ID sample outscores a random OOD sample, ties
/// counted half.
pub fn auroc(scores: &ScoreVector) -> Result<f64> {
    let (id, ood) = split_scores(scores)?;
    Ok(rank_auroc(&id, &ood))
}

fn rank_auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = id
        .iter()
        .map(|&s| (s, true))
        .chain(ood.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Average ranks over tie groups; ranks are 1-based.
    let mut rank_sum_id = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_id += avg_rank;
            }
        }
        i = j;
    }
    let n_id = id.len() as f64;
    let n_ood = ood.len() as f64;
    (rank_sum_id - n_id * (n_id + 1.0) / 2.0) / (n_id * n_ood)
}

/// `(fpr, threshold)` at the largest threshold keeping TPR at or above
/// `target_tpr`; samples scoring at or above the threshold count as accepted.
pub fn fpr_at_tpr(scores: &ScoreVector, target_tpr: f64) -> Result<(f64, f64)> {
    if !(0.0 < target_tpr && target_tpr <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target TPR must be in (0, 1], got {target_tpr}"
        )));
    }
    let (mut id, ood) = split_scores(scores)?;
    id.sort_by(|a, b| b.total_cmp(a));
    let k = ((target_tpr * id.len() as f64).ceil() as usize).clamp(1, id.len());
    let threshold = id[k - 1];
    let fp = ood.iter().filter(|&&s| s >= threshold).count();
    Ok((fp as f64 / ood.len() as f64, threshold))
}

/// `0.5 (1 - TPR) + 0.5 FPR` at the operating point found by [`fpr_at_tpr`].
pub fn detection_error(scores: &ScoreVector, target_tpr: f64) -> Result<f64> {
    let (fpr, threshold) = fpr_at_tpr(scores, target_tpr)?;
    let (id, _) = split_scores(scores)?;
    let tpr = id.iter().filter(|&&s| s >= threshold).count() as f64 / id.len() as f64;
    Ok(0.5 * (1.0 - tpr) + 0.5 * fpr)
}

/// Minimum of `0.5 (1 - TPR) + 0.5 FPR` over all candidate thresholds, for
/// callers that prefer the threshold-free variant.
pub fn detection_error_min(scores: &ScoreVector) -> Result<f64> {
    let (id, ood) = split_scores(scores)?;
    let mut candidates: Vec<f64> = id.iter().chain(ood.iter()).copied().collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();
    let mut best = f64::INFINITY;
    // Also consider rejecting everything (threshold above every score).
    for theta in candidates.into_iter().chain([f64::INFINITY]) {
        let tpr = id.iter().filter(|&&s| s >= theta).count() as f64 / id.len() as f64;
        let fpr = ood.iter().filter(|&&s| s >= theta).count() as f64 / ood.len() as f64;
        best = best.min(0.5 * (1.0 - tpr) + 0.5 * fpr);
    }
    Ok(best)
}

/// All three metrics at the 95%-TPR operating point.
pub fn evaluate(scores: &ScoreVector) -> Result<EvalReport> {
    evaluate_at(scores, 0.95)
}

pub fn evaluate_at(scores: &ScoreVector, target_tpr: f64) -> Result<EvalReport> {
    let (id, ood) = split_scores(scores)?;
    let auroc = auroc(scores)?;
    let (fpr, threshold) = fpr_at_tpr(scores, target_tpr)?;
    let det = detection_error(scores, target_tpr)?;
    Ok(EvalReport {
        auroc,
        fpr_at_95tpr: fpr,
        detection_error: det,
        n_id: id.len(),
        n_ood: ood.len(),
        threshold,
    })
}

/// Same metrics with positive class = correctly classified ID sample.
pub fn misclassification_eval(scores: &[f64], correct: &[bool]) -> Result<EvalReport> {
    if scores.len() != correct.len() {
        return Err(Error::Shape("scores and correctness flags disagree".into()));
    }
    let sv = ScoreVector::new(
        (0..scores.len()).map(|i| i.to_string()).collect(),
        scores.to_vec(),
        correct.iter().map(|&c| u8::from(!c)).collect(),
    )?;
    evaluate(&sv)
}

/// Max over synset pairs of `(wup + path) / 2` for the two classes.
pub fn prediction_similarity(
    mapping: &ClassMapping,
    taxonomy: &Taxonomy,
    ground_truth: &ClassRef,
    predicted: &ClassRef,
) -> Result<f64> {
    class_similarity(mapping, taxonomy, ground_truth, predicted, PairMetric::Prediction)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupBy {
    GroundTruth,
    Predicted,
}

/// Mean prediction similarity per group, ordered by descending mean then
/// group name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityAggregate {
    pub group: ClassRef,
    pub mean_similarity: f64,
    pub count: usize,
}

pub fn aggregate_similarity(
    predictions: &[(ClassRef, ClassRef)],
    mapping: &ClassMapping,
    taxonomy: &Taxonomy,
    group_by: GroupBy,
) -> Result<Vec<SimilarityAggregate>> {
    let mut sums: BTreeMap<ClassRef, (f64, usize)> = BTreeMap::new();
    for (gt, pred) in predictions {
        let sim = prediction_similarity(mapping, taxonomy, gt, pred)?;
        let key = match group_by {
            GroupBy::GroundTruth => gt.clone(),
            GroupBy::Predicted => pred.clone(),
        };
        let entry = sums.entry(key).or_insert((0.0, 0));
        entry.0 += sim;
        entry.1 += 1;
    }
    let mut out: Vec<SimilarityAggregate> = sums
        .into_iter()
        .map(|(group, (sum, count))| SimilarityAggregate {
            group,
            mean_similarity: sum / count as f64,
            count,
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_similarity
            .total_cmp(&a.mean_similarity)
            .then_with(|| a.group.cmp(&b.group))
    });
    Ok(out)
}

/// First and last `k` aggregates, mirroring top/bottom bar charts.
pub fn top_bottom(
    aggregates: &[SimilarityAggregate],
    k: usize,
) -> (Vec<SimilarityAggregate>, Vec<SimilarityAggregate>) {
    let top = aggregates.iter().take(k).cloned().collect();
    let bottom = aggregates
        .iter()
        .rev()
        .take(k)
        .rev()
        .cloned()
        .collect();
    (top, bottom)
}
