//! Benchmark manifest generation with deterministic stratified sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::store::atomic_write;

use super::distance::{assign_ood_labels, SemanticDistanceTable};
use super::{ClassRef, OodnessLevel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// How ID/OOD labels are assigned to the OOD-source dataset's classes.
#[derive(Clone, Debug, PartialEq)]
pub enum Recipe {
    /// Every OOD-source class is OOD and collapsed into one class.
    Baseline { collapsed_class: String },
    /// Classes sharing a name with an ID-dataset class are removed; the rest
    /// are OOD.
    InterDataset,
    /// ID iff semantic distance <= tau.
    WordnetThreshold { tau: f64 },
    /// Levels {0, 1} are ID, {2, 3} OOD.
    FacetsT1,
    /// Levels {0, 1, 2} are ID, {3} OOD.
    FacetsT2,
}

impl Recipe {
    pub fn name(&self) -> String {
        match self {
            Recipe::Baseline { .. } => "baseline".into(),
            Recipe::InterDataset => "inter_dataset".into(),
            Recipe::WordnetThreshold { tau } => format!("wordnet_t{:02}", (tau * 100.0).round()),
            Recipe::FacetsT1 => "facets_t1".into(),
            Recipe::FacetsT2 => "facets_t2".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub dataset: String,
    pub class: String,
    pub split: Split,
    /// 0 = ID, 1 = OOD.
    pub z: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BenchmarkManifest {
    pub name: String,
    pub entries: Vec<ManifestEntry>,
}

impl BenchmarkManifest {
    /// `(id_samples, ood_samples)` totals for one split.
    pub fn split_totals(&self, split: Split) -> (usize, usize) {
        let mut id = 0;
        let mut ood = 0;
        for e in self.entries.iter().filter(|e| e.split == split) {
            if e.z == 0 {
                id += e.count;
            } else {
                ood += e.count;
            }
        }
        (id, ood)
    }

    /// JSON-lines, one entry per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            let line = serde_json::to_string(e).map_err(|err| Error::Json {
                path: path.to_path_buf(),
                source: err,
            })?;
            out.push_str(&line);
            out.push('\n');
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read_jsonl(name: &str, path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?);
        }
        Ok(BenchmarkManifest {
            name: name.to_string(),
            entries,
        })
    }
}

/// What to build and how to sample it.
#[derive(Clone, Debug)]
pub struct ManifestSpec {
    pub name: String,
    pub recipe: Recipe,
    pub seed: u64,
    pub id_dataset: String,
    pub ood_dataset: String,
    /// Per-class sample quotas per split.
    pub val_quota: usize,
    pub test_quota: usize,
    /// Emit the chosen sample ids, not just counts.
    pub include_sample_ids: bool,
    /// Take whatever is available instead of erroring on short classes.
    pub cap_to_available: bool,
}

/// Label inputs consumed by the recipes.
#[derive(Clone, Debug)]
pub struct ManifestInputs<'a> {
    /// `(dataset, class)` -> sample id list.
    pub samples: &'a BTreeMap<ClassRef, Vec<String>>,
    /// OODness levels for the facets recipes.
    pub levels: Option<&'a BTreeMap<ClassRef, OodnessLevel>>,
    /// Distance table for the wordnet-threshold recipe.
    pub distances: Option<&'a SemanticDistanceTable>,
}

/// Exactly `n` seeded-shuffle draws per class (all, if capped), flattened in
/// class order. Each class owns its own derived stream, so the draw for one
/// class is independent of which other classes are present.
pub fn stratified_sample(
    groups: &BTreeMap<String, Vec<String>>,
    n: usize,
    seed: u64,
    cap_to_available: bool,
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (class, ids) in groups {
        let mut rng = derive_rng(seed, &format!("stratified/{class}"));
        let mut pool = ids.clone();
        pool.shuffle(&mut rng);
        let take = if cap_to_available { n.min(pool.len()) } else { n };
        if take > pool.len() {
            return Err(Error::QuotaExceeded {
                class: class.clone(),
                requested: n,
                available: pool.len(),
            });
        }
        out.extend(pool.into_iter().take(take));
    }
    Ok(out)
}

/// Deterministic manifest for `(recipe, seed)`: per-class binary OODness from
/// the recipe, then disjoint val/test draws from a per-class seeded shuffle.
pub fn build_manifest(spec: &ManifestSpec, inputs: &ManifestInputs) -> Result<BenchmarkManifest> {
    // (class, z, level, sample pool) rows in deterministic class order.
    let mut rows: Vec<(ClassRef, u8, Option<u8>, Vec<String>)> = Vec::new();

    for (class, ids) in inputs.samples {
        if class.dataset == spec.id_dataset {
            let level = inputs
                .levels
                .and_then(|l| l.get(class))
                .map(|l| l.value());
            rows.push((class.clone(), 0, level, ids.clone()));
        }
    }

    let ood_classes: Vec<(&ClassRef, &Vec<String>)> = inputs
        .samples
        .iter()
        .filter(|(c, _)| c.dataset == spec.ood_dataset)
        .collect();

    match &spec.recipe {
        Recipe::Baseline { collapsed_class } => {
            // The digit dataset collapses to a single OOD class.
            let mut pool = Vec::new();
            for (_, ids) in &ood_classes {
                pool.extend((*ids).clone());
            }
            if !pool.is_empty() {
                rows.push((
                    ClassRef::new(spec.ood_dataset.clone(), collapsed_class.clone()),
                    1,
                    None,
                    pool,
                ));
            }
        }
        Recipe::InterDataset => {
            let id_names: Vec<&str> = inputs
                .samples
                .keys()
                .filter(|c| c.dataset == spec.id_dataset)
                .map(|c| c.class.as_str())
                .collect();
            for (class, ids) in &ood_classes {
                if id_names.contains(&class.class.as_str()) {
                    continue; // common classes are removed outright
                }
                rows.push(((*class).clone(), 1, None, (*ids).clone()));
            }
        }
        Recipe::WordnetThreshold { tau } => {
            let table = inputs.distances.ok_or_else(|| {
                Error::InvalidParameter("wordnet-threshold recipe needs a distance table".into())
            })?;
            let labels = assign_ood_labels(table, *tau)?;
            for (class, ids) in &ood_classes {
                let z = *labels.get(class).ok_or_else(|| Error::UnmappedClass {
                    dataset: class.dataset.clone(),
                    class: class.class.clone(),
                })?;
                rows.push(((*class).clone(), z, None, (*ids).clone()));
            }
        }
        Recipe::FacetsT1 | Recipe::FacetsT2 => {
            let levels = inputs.levels.ok_or_else(|| {
                Error::InvalidParameter("facets recipes need OODness levels".into())
            })?;
            let id_max = if spec.recipe == Recipe::FacetsT1 { 1 } else { 2 };
            for (class, ids) in &ood_classes {
                let level = levels.get(class).ok_or_else(|| Error::UnmappedClass {
                    dataset: class.dataset.clone(),
                    class: class.class.clone(),
                })?;
                let z = u8::from(level.value() > id_max);
                rows.push(((*class).clone(), z, Some(level.value()), (*ids).clone()));
            }
        }
    }

    rows.sort_by(|a, b| a.0.cmp(&b.0));

    let mut entries = Vec::new();
    for (class, z, level, ids) in rows {
        let mut rng = derive_rng(
            spec.seed,
            &format!("manifest/{}/{}/{}", spec.name, class.dataset, class.class),
        );
        let mut pool = ids;
        pool.shuffle(&mut rng);

        let need = spec.val_quota + spec.test_quota;
        if pool.len() < need && !spec.cap_to_available {
            return Err(Error::QuotaExceeded {
                class: class.to_string(),
                requested: need,
                available: pool.len(),
            });
        }
        let val_take = spec.val_quota.min(pool.len());
        let test_take = spec.test_quota.min(pool.len() - val_take);
        let val_ids = &pool[..val_take];
        let test_ids = &pool[val_take..val_take + test_take];

        for (split, chosen) in [(Split::Val, val_ids), (Split::Test, test_ids)] {
            entries.push(ManifestEntry {
                dataset: class.dataset.clone(),
                class: class.class.clone(),
                split,
                z,
                level,
                count: chosen.len(),
                samples: spec.include_sample_ids.then(|| chosen.to_vec()),
            });
        }
    }

    Ok(BenchmarkManifest {
        name: spec.name.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::super::distance::DistanceRow;
    use super::*;

    fn sample_map(classes: &[(&str, &str, usize)]) -> BTreeMap<ClassRef, Vec<String>> {
        classes
            .iter()
            .map(|(ds, class, n)| {
                (
                    ClassRef::new(*ds, *class),
                    (0..*n).map(|i| format!("{ds}/{class}/{i:04}")).collect(),
                )
            })
            .collect()
    }

    fn spec(recipe: Recipe) -> ManifestSpec {
        ManifestSpec {
            name: "fixture".into(),
            recipe,
            seed: 7,
            id_dataset: "places".into(),
            ood_dataset: "other".into(),
            val_quota: 2,
            test_quota: 2,
            include_sample_ids: true,
            cap_to_available: false,
        }
    }

    #[test]
    fn facets_t1_and_t2_level_rules() {
        let samples = sample_map(&[
            ("places", "home", 4),
            ("other", "lvl0", 4),
            ("other", "lvl1", 4),
            ("other", "lvl2", 4),
            ("other", "lvl3", 4),
        ]);
        let levels: BTreeMap<ClassRef, OodnessLevel> = (0..4)
            .map(|l| {
                (
                    ClassRef::new("other", format!("lvl{l}")),
                    OodnessLevel::new(l).unwrap(),
                )
            })
            .collect();
        let inputs = ManifestInputs {
            samples: &samples,
            levels: Some(&levels),
            distances: None,
        };

        let t1 = build_manifest(&spec(Recipe::FacetsT1), &inputs).unwrap();
        let z_of = |m: &BenchmarkManifest, class: &str| {
            m.entries
                .iter()
                .find(|e| e.class == class && e.split == Split::Val)
                .unwrap()
                .z
        };
        assert_eq!(z_of(&t1, "lvl0"), 0);
        assert_eq!(z_of(&t1, "lvl1"), 0);
        assert_eq!(z_of(&t1, "lvl2"), 1);
        assert_eq!(z_of(&t1, "lvl3"), 1);

        let t2 = build_manifest(&spec(Recipe::FacetsT2), &inputs).unwrap();
        assert_eq!(z_of(&t2, "lvl0"), 0);
        assert_eq!(z_of(&t2, "lvl1"), 0);
        assert_eq!(z_of(&t2, "lvl2"), 0);
        assert_eq!(z_of(&t2, "lvl3"), 1);
        assert_eq!(
            t2.entries
                .iter()
                .find(|e| e.class == "lvl3")
                .unwrap()
                .level,
            Some(3)
        );
    }

    #[test]
    fn baseline_collapses_ood_to_single_class() {
        let samples = sample_map(&[
            ("places", "home", 4),
            ("other", "one", 3),
            ("other", "two", 3),
        ]);
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: None,
        };
        let m = build_manifest(
            &spec(Recipe::Baseline {
                collapsed_class: "number".into(),
            }),
            &inputs,
        )
        .unwrap();
        let ood: Vec<&ManifestEntry> = m.entries.iter().filter(|e| e.z == 1).collect();
        assert!(ood.iter().all(|e| e.class == "number"));
        assert_eq!(ood.len(), 2); // val + test
    }

    #[test]
    fn inter_dataset_removes_common_classes() {
        let samples = sample_map(&[
            ("places", "fountain", 4),
            ("other", "fountain", 4),
            ("other", "volcano", 4),
        ]);
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: None,
        };
        let m = build_manifest(&spec(Recipe::InterDataset), &inputs).unwrap();
        assert!(!m
            .entries
            .iter()
            .any(|e| e.dataset == "other" && e.class == "fountain"));
        assert!(m
            .entries
            .iter()
            .any(|e| e.dataset == "other" && e.class == "volcano" && e.z == 1));
    }

    #[test]
    fn wordnet_threshold_recipe_labels_from_table() {
        let samples = sample_map(&[
            ("places", "home", 4),
            ("other", "near", 4),
            ("other", "far", 4),
        ]);
        let table = SemanticDistanceTable {
            rows: vec![
                DistanceRow {
                    class: ClassRef::new("other", "near"),
                    similarity: 0.9,
                    nearest_id_class: ClassRef::new("places", "home"),
                    distance: 0.1,
                },
                DistanceRow {
                    class: ClassRef::new("other", "far"),
                    similarity: 0.1,
                    nearest_id_class: ClassRef::new("places", "home"),
                    distance: 0.9,
                },
            ],
        };
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: Some(&table),
        };
        let m = build_manifest(&spec(Recipe::WordnetThreshold { tau: 0.45 }), &inputs).unwrap();
        let z_of = |class: &str| {
            m.entries
                .iter()
                .find(|e| e.class == class && e.split == Split::Val)
                .unwrap()
                .z
        };
        assert_eq!(z_of("near"), 0);
        assert_eq!(z_of("far"), 1);
    }

    #[test]
    fn manifests_are_deterministic_and_conserve_counts() {
        let samples = sample_map(&[
            ("places", "home", 10),
            ("places", "beach", 10),
            ("other", "volcano", 10),
        ]);
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: None,
        };
        let s = spec(Recipe::InterDataset);
        let a = build_manifest(&s, &inputs).unwrap();
        let b = build_manifest(&s, &inputs).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.jsonl");
        let p2 = dir.path().join("b.jsonl");
        a.write_jsonl(&p1).unwrap();
        b.write_jsonl(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        // Conservation: totals equal entry sums; val and test are disjoint.
        let (id_val, ood_val) = a.split_totals(Split::Val);
        assert_eq!(id_val, 4);
        assert_eq!(ood_val, 2);
        for e in &a.entries {
            assert_eq!(e.count, e.samples.as_ref().unwrap().len());
        }
        for class in ["home", "beach", "volcano"] {
            let ids = |split: Split| -> Vec<String> {
                a.entries
                    .iter()
                    .filter(|e| e.class == class && e.split == split)
                    .flat_map(|e| e.samples.clone().unwrap())
                    .collect()
            };
            let val = ids(Split::Val);
            let test = ids(Split::Test);
            assert!(val.iter().all(|i| !test.contains(i)));
        }
    }

    #[test]
    fn quota_violation_names_the_class() {
        let samples = sample_map(&[("places", "tiny", 3)]);
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: None,
        };
        match build_manifest(&spec(Recipe::InterDataset), &inputs) {
            Err(Error::QuotaExceeded { class, .. }) => assert!(class.contains("tiny")),
            other => panic!("expected quota error, got {other:?}"),
        }

        let mut capped = spec(Recipe::InterDataset);
        capped.cap_to_available = true;
        let m = build_manifest(&capped, &inputs).unwrap();
        let total: usize = m.entries.iter().map(|e| e.count).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn stratified_sample_contracts() {
        let groups: BTreeMap<String, Vec<String>> = [
            ("a".to_string(), vec!["a1".into(), "a2".into()]),
            ("b".to_string(), vec!["b1".into(), "b2".into(), "b3".into()]),
        ]
        .into();

        // n = list length -> the whole list (shuffled).
        let all = stratified_sample(&groups, 2, 7, true).unwrap();
        assert_eq!(all.len(), 4);

        assert!(stratified_sample(&groups, 0, 7, false).unwrap().is_empty());

        let x = stratified_sample(&groups, 2, 7, false).unwrap();
        let y = stratified_sample(&groups, 2, 7, false).unwrap();
        assert_eq!(x, y);

        assert!(matches!(
            stratified_sample(&groups, 3, 7, false),
            Err(Error::QuotaExceeded { class, .. }) if class == "a"
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let samples = sample_map(&[("places", "home", 4), ("other", "volcano", 4)]);
        let inputs = ManifestInputs {
            samples: &samples,
            levels: None,
            distances: None,
        };
        let m = build_manifest(&spec(Recipe::InterDataset), &inputs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        m.write_jsonl(&path).unwrap();
        let back = BenchmarkManifest::read_jsonl("fixture", &path).unwrap();
        assert_eq!(m, back);
    }
}
