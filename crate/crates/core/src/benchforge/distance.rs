//! Semantic distance of source-dataset classes to the closest ID class.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::atomic_write;
use crate::wordnet::Taxonomy;

use super::mapping::{class_similarity, ClassMapping, PairMetric};
use super::ClassRef;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceRow {
    pub class: ClassRef,
    /// Max combined similarity to any ID class.
    pub similarity: f64,
    pub nearest_id_class: ClassRef,
    /// `1 - similarity`.
    pub distance: f64,
}

/// Per-class distance rows, ordered by class.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SemanticDistanceTable {
    pub rows: Vec<DistanceRow>,
}

impl SemanticDistanceTable {
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

/// For every class of `source_dataset` in the mapping: max combined
/// similarity over the ID classes (first argmax wins ties), distance is its
/// complement. Rows are computed in parallel and emitted in class order.
pub fn build_distance_table(
    mapping: &ClassMapping,
    taxonomy: &Taxonomy,
    source_dataset: &str,
    id_classes: &[ClassRef],
) -> Result<SemanticDistanceTable> {
    if id_classes.is_empty() {
        return Err(Error::EmptyInput("ID class set".into()));
    }
    let source_classes = mapping.classes_of(source_dataset);
    if source_classes.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no mapped classes for dataset {source_dataset:?}"
        )));
    }

    let rows = source_classes
        .par_iter()
        .map(|class| {
            let mut best = f64::NEG_INFINITY;
            let mut nearest = None;
            for id_class in id_classes {
                let sim = class_similarity(mapping, taxonomy, class, id_class, PairMetric::Combined)?;
                if sim > best {
                    best = sim;
                    nearest = Some(id_class.clone());
                }
            }
            Ok(DistanceRow {
                class: class.clone(),
                similarity: best,
                nearest_id_class: nearest.expect("non-empty ID class set"),
                distance: 1.0 - best,
            })
        })
        .collect::<Result<Vec<DistanceRow>>>()?;

    Ok(SemanticDistanceTable { rows })
}

/// Named threshold presets.
pub fn threshold_preset(name: &str) -> Option<f64> {
    match name {
        "t40" => Some(0.40),
        "t45" => Some(0.45),
        "t50" => Some(0.50),
        _ => None,
    }
}

/// Binary OODness per class: ID (z = 0) iff distance <= tau.
pub fn assign_ood_labels(
    table: &SemanticDistanceTable,
    tau: f64,
) -> Result<BTreeMap<ClassRef, u8>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "distance threshold must be in [0, 1], got {tau}"
        )));
    }
    Ok(table
        .rows
        .iter()
        .map(|row| (row.class.clone(), u8::from(row.distance > tau)))
        .collect())
}
