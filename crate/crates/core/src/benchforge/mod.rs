//! Benchmark construction: class-to-synset mapping, cross-dataset semantic
//! distance, ID/OOD assignment, and manifest generation with stratified
//! sampling.

mod distance;
mod manifest;
mod mapping;

pub use distance::{assign_ood_labels, build_distance_table, threshold_preset, DistanceRow, SemanticDistanceTable};
pub use manifest::{
    build_manifest, stratified_sample, BenchmarkManifest, ManifestEntry, ManifestInputs,
    ManifestSpec, Recipe, Split,
};
pub use mapping::{
    auto_map_label, class_similarity, load_class_mapping, normalize_label, ClassMapping,
    MappingEntry, MappingSource, PairMetric,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(dataset, class)` pair naming a class across dataset boundaries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassRef {
    pub dataset: String,
    pub class: String,
}

impl ClassRef {
    pub fn new(dataset: impl Into<String>, class: impl Into<String>) -> Self {
        ClassRef {
            dataset: dataset.into(),
            class: class.into(),
        }
    }
}

impl fmt::Display for ClassRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.dataset, self.class)
    }
}

/// Manual OODness annotation: 0 exact label match, 1 semantically related,
/// 2 shares characteristic features, 3 unrelated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OodnessLevel(u8);

impl OodnessLevel {
    pub fn new(level: u8) -> Result<Self> {
        if level > 3 {
            return Err(Error::InvalidParameter(format!(
                "OODness level must be in 0..=3, got {level}"
            )));
        }
        Ok(OodnessLevel(level))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for OodnessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
