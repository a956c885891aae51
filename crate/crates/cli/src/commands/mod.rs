pub mod bench;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod oodl;
pub mod report_cmd;
pub mod score;
pub mod wordnet;

use std::path::Path;

use oodbench_core::wordnet::{parse_wordnet, Pos, SynsetId, Taxonomy};

/// Parse the given data files into a taxonomy.
pub fn load_taxonomy(paths: &[std::path::PathBuf]) -> anyhow::Result<Taxonomy> {
    if paths.is_empty() {
        anyhow::bail!("at least one WordNet data file is required");
    }
    Ok(parse_wordnet(paths)?)
}

/// Resolve a CLI synset argument: a literal id like `n08559508`, or a noun
/// lemma looked up in the taxonomy.
pub fn resolve_synsets(taxonomy: &Taxonomy, raw: &str) -> anyhow::Result<Vec<SynsetId>> {
    if let Ok(id) = raw.parse::<SynsetId>() {
        if taxonomy.contains(id) {
            return Ok(vec![id]);
        }
        anyhow::bail!("synset {id} not present in the taxonomy");
    }
    let ids = taxonomy.synsets_for_lemma(raw, Pos::Noun);
    if ids.is_empty() {
        anyhow::bail!("no noun synset with lemma {raw:?}");
    }
    Ok(ids.to_vec())
}

/// Read `dataset<TAB>class` rows (optionally with more columns, ignored).
pub fn read_class_list(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        match (fields.next(), fields.next()) {
            (Some(ds), Some(class)) if !ds.is_empty() && !class.is_empty() => {
                out.push((ds.to_string(), class.to_string()));
            }
            _ => anyhow::bail!(
                "{}:{}: expected dataset<TAB>class",
                path.display(),
                no + 1
            ),
        }
    }
    Ok(out)
}
