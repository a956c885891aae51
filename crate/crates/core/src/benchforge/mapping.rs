//! Class label to synset mapping and class-level similarity.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::atomic_write;
use crate::wordnet::{Pos, SynsetId, Taxonomy};

use super::{ClassRef, OodnessLevel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingSource {
    Auto,
    Manual,
}

#[derive(Clone, Debug)]
pub struct MappingEntry {
    pub synsets: Vec<SynsetId>,
    pub source: MappingSource,
    pub level: Option<OodnessLevel>,
}

/// Class label -> synset mapping, auto-filled from lemma lookups and patched
/// by a manual override table.
#[derive(Clone, Debug, Default)]
pub struct ClassMapping {
    entries: BTreeMap<ClassRef, MappingEntry>,
}

/// Canonical head term of a class label: lowercase, single-letter directory
/// segments and `/`-suffixed scene qualifiers dropped, spaces joined with
/// underscores to match WordNet lemma form.
pub fn normalize_label(label: &str) -> String {
    let lower = label.trim().to_lowercase();
    let segments: Vec<&str> = lower.split('/').filter(|s| !s.is_empty()).collect();
    let head = segments
        .iter()
        .find(|s| s.chars().count() > 1)
        .or_else(|| segments.first())
        .copied()
        .unwrap_or("");
    head.trim()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

/// All noun synsets whose lemma set contains the normalized head term. An
/// empty result is a valid outcome meaning manual mapping is required.
pub fn auto_map_label(label: &str, taxonomy: &Taxonomy) -> Vec<SynsetId> {
    let head = normalize_label(label);
    taxonomy.synsets_for_lemma(&head, Pos::Noun).to_vec()
}

impl ClassMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: ClassRef, entry: MappingEntry) {
        self.entries.insert(class, entry);
    }

    pub fn get(&self, class: &ClassRef) -> Option<&MappingEntry> {
        self.entries.get(class)
    }

    pub fn synsets(&self, class: &ClassRef) -> Result<&[SynsetId]> {
        match self.entries.get(class) {
            Some(e) if !e.synsets.is_empty() => Ok(&e.synsets),
            _ => Err(Error::UnmappedClass {
                dataset: class.dataset.clone(),
                class: class.class.clone(),
            }),
        }
    }

    pub fn level(&self, class: &ClassRef) -> Option<OodnessLevel> {
        self.entries.get(class).and_then(|e| e.level)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ClassRef, &MappingEntry)> {
        self.entries.iter()
    }

    pub fn classes_of(&self, dataset: &str) -> Vec<ClassRef> {
        self.entries
            .keys()
            .filter(|c| c.dataset == dataset)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tab-separated `dataset  class  synset_ids(comma)  level  source`;
    /// level may be empty.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (class, entry) in &self.entries {
            let ids: Vec<String> = entry.synsets.iter().map(SynsetId::to_string).collect();
            let level = entry
                .level
                .map(|l| l.to_string())
                .unwrap_or_default();
            let source = match entry.source {
                MappingSource::Auto => "auto",
                MappingSource::Manual => "manual",
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                class.dataset,
                class.class,
                ids.join(","),
                level,
                source
            ));
        }
        atomic_write(path, out.as_bytes())
    }

    /// Read a mapping or override table: `dataset  class  synset_ids(comma)
    /// [level] [source]`. Blank lines and `#` comments are skipped.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut mapping = ClassMapping::new();
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim_end();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 3 {
                return Err(Error::Parse {
                    file: path.display().to_string(),
                    line: no + 1,
                    msg: "expected dataset<TAB>class<TAB>synset_ids".into(),
                });
            }
            let synsets = fields[2]
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse::<SynsetId>())
                .collect::<Result<Vec<SynsetId>>>()
                .map_err(|e| Error::Parse {
                    file: path.display().to_string(),
                    line: no + 1,
                    msg: e.to_string(),
                })?;
            let level = match fields.get(3).copied().unwrap_or("") {
                "" => None,
                raw => Some(
                    raw.parse::<u8>()
                        .map_err(|_| ())
                        .and_then(|v| OodnessLevel::new(v).map_err(|_| ()))
                        .map_err(|_| Error::Parse {
                            file: path.display().to_string(),
                            line: no + 1,
                            msg: format!("bad OODness level {raw:?}"),
                        })?,
                ),
            };
            let source = match fields.get(4).copied() {
                Some("auto") => MappingSource::Auto,
                _ => MappingSource::Manual,
            };
            mapping.insert(
                ClassRef::new(fields[0], fields[1]),
                MappingEntry {
                    synsets,
                    source,
                    level,
                },
            );
        }
        Ok(mapping)
    }
}

/// Auto-map every configured class, let manual overrides win, and fail hard
/// listing every class left without a synset.
pub fn load_class_mapping(
    classes: &[(String, Vec<String>)],
    taxonomy: &Taxonomy,
    overrides: Option<&ClassMapping>,
) -> Result<ClassMapping> {
    let mut mapping = ClassMapping::new();
    for (dataset, labels) in classes {
        for label in labels {
            let class = ClassRef::new(dataset.clone(), label.clone());
            let synsets = auto_map_label(label, taxonomy);
            mapping.insert(
                class,
                MappingEntry {
                    synsets,
                    source: MappingSource::Auto,
                    level: None,
                },
            );
        }
    }
    if let Some(overrides) = overrides {
        for (class, entry) in overrides.iter() {
            mapping.insert(
                class.clone(),
                MappingEntry {
                    synsets: entry.synsets.clone(),
                    source: MappingSource::Manual,
                    level: entry.level,
                },
            );
        }
    }

    for (class, entry) in mapping.iter() {
        for id in &entry.synsets {
            if !taxonomy.contains(*id) {
                return Err(Error::UnknownSynset(format!("{id} (mapped from {class})")));
            }
        }
    }
    let gaps: Vec<String> = mapping
        .iter()
        .filter(|(_, e)| e.synsets.is_empty())
        .map(|(c, _)| c.to_string())
        .collect();
    if !gaps.is_empty() {
        return Err(Error::MappingGaps(gaps.join(", ")));
    }
    Ok(mapping)
}

/// Pairwise synset metric used inside class similarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMetric {
    /// Mean of path, Wu-Palmer, and normalized Leacock-Chodorow.
    Combined,
    /// `(wup + path) / 2`, the prediction-similarity metric.
    Prediction,
}

/// Maximum over all synset pairs of the chosen pairwise metric.
pub fn class_similarity(
    mapping: &ClassMapping,
    taxonomy: &Taxonomy,
    a: &ClassRef,
    b: &ClassRef,
    metric: PairMetric,
) -> Result<f64> {
    let sa = mapping.synsets(a)?;
    let sb = mapping.synsets(b)?;
    let mut best = f64::NEG_INFINITY;
    for &s1 in sa {
        for &s2 in sb {
            let sim = match metric {
                PairMetric::Combined => taxonomy.combined_similarity(s1, s2)?,
                PairMetric::Prediction => taxonomy.prediction_pair_similarity(s1, s2)?,
            };
            if sim > best {
                best = sim;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordnet::test_fixtures::{build, chain3, node, noun};

    #[test]
    fn normalize_label_rules() {
        assert_eq!(normalize_label("fountain"), "fountain");
        assert_eq!(normalize_label("/f/fountain"), "fountain");
        assert_eq!(normalize_label("field/wild"), "field");
        assert_eq!(normalize_label("Dressing Room"), "dressing_room");
        assert_eq!(normalize_label("dressing_room"), "dressing_room");
        assert_eq!(normalize_label("underwater/ocean_deep"), "underwater");
        assert_eq!(normalize_label(""), "");
    }

    #[test]
    fn auto_map_hits_and_misses() {
        let t = chain3();
        assert_eq!(auto_map_label("a", &t), vec![noun(1)]);
        assert_eq!(auto_map_label("A", &t), vec![noun(1)]);
        assert!(auto_map_label("xyzzy_nonsense", &t).is_empty());
    }

    #[test]
    fn auto_map_returns_all_matching_synsets() {
        let t = build(vec![
            node(1, "fountain", &[]),
            node(2, "fountain", &[1]),
        ]);
        assert_eq!(auto_map_label("fountain", &t), vec![noun(1), noun(2)]);
    }

    #[test]
    fn manual_overrides_win() {
        let t = chain3();
        let mut overrides = ClassMapping::new();
        overrides.insert(
            ClassRef::new("places", "a"),
            MappingEntry {
                synsets: vec![noun(3)],
                source: MappingSource::Manual,
                level: Some(OodnessLevel::new(1).unwrap()),
            },
        );
        // "a" auto-maps to noun 1, "mystery" auto-maps to nothing.
        let classes = vec![("places".to_string(), vec!["a".to_string()])];
        let m = load_class_mapping(&classes, &t, Some(&overrides)).unwrap();
        let entry = m.get(&ClassRef::new("places", "a")).unwrap();
        assert_eq!(entry.synsets, vec![noun(3)]);
        assert_eq!(entry.source, MappingSource::Manual);
        assert_eq!(entry.level.unwrap().value(), 1);
    }

    #[test]
    fn override_fills_auto_gap() {
        let t = chain3();
        let mut overrides = ClassMapping::new();
        overrides.insert(
            ClassRef::new("places", "mystery"),
            MappingEntry {
                synsets: vec![noun(2)],
                source: MappingSource::Manual,
                level: None,
            },
        );
        let classes = vec![("places".to_string(), vec!["mystery".to_string()])];
        let m = load_class_mapping(&classes, &t, Some(&overrides)).unwrap();
        assert_eq!(m.synsets(&ClassRef::new("places", "mystery")).unwrap(), &[noun(2)]);
    }

    #[test]
    fn missing_class_is_a_hard_error_naming_it() {
        let t = chain3();
        let classes = vec![(
            "places".to_string(),
            vec!["a".to_string(), "xyzzy_nonsense".to_string()],
        )];
        match load_class_mapping(&classes, &t, None) {
            Err(Error::MappingGaps(list)) => assert!(list.contains("xyzzy_nonsense")),
            other => panic!("expected mapping gap error, got {other:?}"),
        }
    }

    #[test]
    fn class_similarity_shared_synset_is_one() {
        let t = chain3();
        let mut m = ClassMapping::new();
        for (name, ids) in [("x", vec![noun(1), noun(2)]), ("y", vec![noun(2)])] {
            m.insert(
                ClassRef::new("d", name),
                MappingEntry {
                    synsets: ids,
                    source: MappingSource::Manual,
                    level: None,
                },
            );
        }
        let sim = class_similarity(
            &m,
            &t,
            &ClassRef::new("d", "x"),
            &ClassRef::new("d", "y"),
            PairMetric::Combined,
        )
        .unwrap();
        assert_eq!(sim, 1.0);
    }

    #[test]
    fn class_similarity_takes_max_over_pairs() {
        let t = chain3();
        let mut m = ClassMapping::new();
        m.insert(
            ClassRef::new("d", "ab"),
            MappingEntry {
                synsets: vec![noun(1), noun(2)],
                source: MappingSource::Manual,
                level: None,
            },
        );
        m.insert(
            ClassRef::new("d", "c"),
            MappingEntry {
                synsets: vec![noun(3)],
                source: MappingSource::Manual,
                level: None,
            },
        );
        let got = class_similarity(
            &m,
            &t,
            &ClassRef::new("d", "ab"),
            &ClassRef::new("d", "c"),
            PairMetric::Prediction,
        )
        .unwrap();
        // Pairs: (1,3) sp=2 wup=1/2 -> 5/12; (2,3) sp=1 wup=4/5 -> 0.65.
        let expected = (0.8 + 0.5) / 2.0;
        assert!((got - expected).abs() < 1e-12);

        // Single-synset classes reduce to the pairwise metric directly.
        let single = class_similarity(
            &m,
            &t,
            &ClassRef::new("d", "c"),
            &ClassRef::new("d", "c"),
            PairMetric::Prediction,
        )
        .unwrap();
        assert_eq!(single, 1.0);
    }

    #[test]
    fn class_similarity_is_symmetric() {
        let t = chain3();
        let mut m = ClassMapping::new();
        m.insert(
            ClassRef::new("d", "p"),
            MappingEntry {
                synsets: vec![noun(1)],
                source: MappingSource::Manual,
                level: None,
            },
        );
        m.insert(
            ClassRef::new("d", "q"),
            MappingEntry {
                synsets: vec![noun(3)],
                source: MappingSource::Manual,
                level: None,
            },
        );
        let p = ClassRef::new("d", "p");
        let q = ClassRef::new("d", "q");
        for metric in [PairMetric::Combined, PairMetric::Prediction] {
            assert_eq!(
                class_similarity(&m, &t, &p, &q, metric).unwrap(),
                class_similarity(&m, &t, &q, &p, metric).unwrap()
            );
        }
    }

    #[test]
    fn unmapped_class_errors() {
        let t = chain3();
        let m = ClassMapping::new();
        assert!(matches!(
            class_similarity(
                &m,
                &t,
                &ClassRef::new("d", "p"),
                &ClassRef::new("d", "q"),
                PairMetric::Combined
            ),
            Err(Error::UnmappedClass { .. })
        ));
    }

    #[test]
    fn mapping_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mapping.tsv");
        let mut m = ClassMapping::new();
        m.insert(
            ClassRef::new("places", "abbey"),
            MappingEntry {
                synsets: vec![noun(1), noun(2)],
                source: MappingSource::Auto,
                level: None,
            },
        );
        m.insert(
            ClassRef::new("sun", "field/wild"),
            MappingEntry {
                synsets: vec![noun(3)],
                source: MappingSource::Manual,
                level: Some(OodnessLevel::new(2).unwrap()),
            },
        );
        m.write_tsv(&path).unwrap();
        let back = ClassMapping::read_tsv(&path).unwrap();
        assert_eq!(back.len(), 2);
        let e = back.get(&ClassRef::new("sun", "field/wild")).unwrap();
        assert_eq!(e.synsets, vec![noun(3)]);
        assert_eq!(e.level.unwrap().value(), 2);
        assert_eq!(e.source, MappingSource::Manual);
        let a = back.get(&ClassRef::new("places", "abbey")).unwrap();
        assert_eq!(a.source, MappingSource::Auto);
        assert!(a.level.is_none());
    }

    #[test]
    fn bad_level_in_tsv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "places\tabbey\tn00000001\t7\n").unwrap();
        match ClassMapping::read_tsv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
