//! WordNet hypernym taxonomy: parsing, depth bookkeeping, and the path-based
//! similarity metrics built on it.
//!
//! The taxonomy is a DAG of synsets under the hypernym ("is-a") relation. A
//! virtual root per part of speech adopts every synset that has no hypernym,
//! so the noun taxonomy is single-rooted and path metrics are total. Depth is
//! counted in nodes along the longest root path: the virtual root sits at
//! depth 0 and a root-adjacent synset at depth 1.

mod parse;
mod similarity;

pub use parse::{parse_reader, parse_wordnet};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Part of speech as used by the WordNet database files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl Pos {
    /// `n`/`v`/`a`/`r`, with adjective satellites (`s`) folded into `Adj`.
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' | 's' => Some(Pos::Adj),
            'r' => Some(Pos::Adv),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adj => 'a',
            Pos::Adv => 'r',
        }
    }

    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv];
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
        })
    }
}

/// `(pos, offset)` pair identifying a synset; rendered as `n08559508`.
/// Offset 0 is reserved for the per-pos virtual root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SynsetId {
    pub pos: Pos,
    pub offset: u32,
}

impl SynsetId {
    pub fn new(pos: Pos, offset: u32) -> Self {
        SynsetId { pos, offset }
    }

    pub fn virtual_root(pos: Pos) -> Self {
        SynsetId { pos, offset: 0 }
    }

    pub fn is_virtual_root(&self) -> bool {
        self.offset == 0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:08}", self.pos.to_char(), self.offset)
    }
}

impl FromStr for SynsetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let pos = chars
            .next()
            .and_then(Pos::from_char)
            .ok_or_else(|| Error::format("synset id", format!("bad pos in {s:?}")))?;
        let digits: String = chars.collect();
        if digits.len() != 8 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::format(
                "synset id",
                format!("{s:?} needs an 8-digit offset"),
            ));
        }
        let offset = digits
            .parse::<u32>()
            .map_err(|_| Error::format("synset id", format!("bad offset in {s:?}")))?;
        Ok(SynsetId { pos, offset })
    }
}

/// Hypernym edge; `instance` marks `@i` pointers, treated as ordinary
/// hypernymy for connectivity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hypernym {
    pub target: SynsetId,
    pub instance: bool,
}

#[derive(Clone, Debug)]
pub struct Synset {
    pub id: SynsetId,
    pub lemmas: Vec<String>,
    pub hypernyms: Vec<Hypernym>,
    pub gloss: Option<String>,
}

/// Immutable hypernym taxonomy with per-synset depth cache and lemma index.
/// Safe for concurrent reads after construction.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    synsets: BTreeMap<SynsetId, Synset>,
    hyponyms: BTreeMap<SynsetId, Vec<SynsetId>>,
    lemma_index: BTreeMap<(String, Pos), Vec<SynsetId>>,
    depth: BTreeMap<SynsetId, u32>,
    max_depth: BTreeMap<Pos, u32>,
}

impl Taxonomy {
    pub fn contains(&self, id: SynsetId) -> bool {
        self.synsets.contains_key(&id)
    }

    pub fn synset(&self, id: SynsetId) -> Result<&Synset> {
        self.synsets
            .get(&id)
            .ok_or_else(|| Error::UnknownSynset(id.to_string()))
    }

    /// Real synsets, virtual roots excluded.
    pub fn iter(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values().filter(|s| !s.id.is_virtual_root())
    }

    /// Number of real synsets.
    pub fn len(&self) -> usize {
        self.synsets.len() - Pos::ALL.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node-count depth; 0 for a virtual root, >= 1 for real synsets.
    pub fn depth(&self, id: SynsetId) -> Result<u32> {
        self.depth
            .get(&id)
            .copied()
            .ok_or_else(|| Error::UnknownSynset(id.to_string()))
    }

    /// Longest root-to-leaf path in node count for the given pos.
    pub fn max_depth(&self, pos: Pos) -> u32 {
        self.max_depth.get(&pos).copied().unwrap_or(0)
    }

    /// Synsets whose lemma set contains `lemma` (exact lowercase match).
    pub fn synsets_for_lemma(&self, lemma: &str, pos: Pos) -> &[SynsetId] {
        self.lemma_index
            .get(&(lemma.to_lowercase(), pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub(crate) fn hyponyms_of(&self, id: SynsetId) -> &[SynsetId] {
        self.hyponyms.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Accumulates synsets, then links roots, checks edge resolution, detects
/// cycles, and computes the depth cache.
#[derive(Debug, Default)]
pub struct TaxonomyBuilder {
    synsets: BTreeMap<SynsetId, Synset>,
}

impl TaxonomyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_synset(&mut self, synset: Synset) -> Result<()> {
        if synset.id.is_virtual_root() {
            return Err(Error::InvalidParameter(format!(
                "offset 0 is reserved for the virtual root ({})",
                synset.id
            )));
        }
        if synset.lemmas.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "synset {} has no lemmas",
                synset.id
            )));
        }
        if self.synsets.contains_key(&synset.id) {
            return Err(Error::DuplicateSynset(synset.id.to_string()));
        }
        let mut synset = synset;
        for lemma in &mut synset.lemmas {
            *lemma = lemma.to_lowercase();
        }
        self.synsets.insert(synset.id, synset);
        Ok(())
    }

    pub fn finish(mut self) -> Result<Taxonomy> {
        for pos in Pos::ALL {
            self.synsets.insert(
                SynsetId::virtual_root(pos),
                Synset {
                    id: SynsetId::virtual_root(pos),
                    lemmas: vec!["*root*".into()],
                    hypernyms: Vec::new(),
                    gloss: None,
                },
            );
        }

        // Adopt hypernym-less synsets under their pos root; check the rest
        // resolve.
        let ids: Vec<SynsetId> = self.synsets.keys().copied().collect();
        for id in &ids {
            if id.is_virtual_root() {
                continue;
            }
            let targets: Vec<SynsetId> = self.synsets[id].hypernyms.iter().map(|h| h.target).collect();
            for t in &targets {
                if !self.synsets.contains_key(t) {
                    return Err(Error::UnresolvedHypernym {
                        referrer: id.to_string(),
                        target: t.to_string(),
                    });
                }
            }
            if targets.is_empty() {
                let root = SynsetId::virtual_root(id.pos);
                self.synsets.get_mut(id).unwrap().hypernyms.push(Hypernym {
                    target: root,
                    instance: false,
                });
            }
        }

        let depth = compute_depths(&self.synsets)?;

        let mut max_depth = BTreeMap::new();
        for (id, d) in &depth {
            if !id.is_virtual_root() {
                let entry = max_depth.entry(id.pos).or_insert(0);
                *entry = (*entry).max(*d);
            }
        }
        for pos in Pos::ALL {
            max_depth.entry(pos).or_insert(0);
        }

        let mut hyponyms: BTreeMap<SynsetId, Vec<SynsetId>> = BTreeMap::new();
        let mut lemma_index: BTreeMap<(String, Pos), Vec<SynsetId>> = BTreeMap::new();
        for synset in self.synsets.values() {
            for h in &synset.hypernyms {
                hyponyms.entry(h.target).or_default().push(synset.id);
            }
            if !synset.id.is_virtual_root() {
                for lemma in &synset.lemmas {
                    lemma_index
                        .entry((lemma.clone(), synset.id.pos))
                        .or_default()
                        .push(synset.id);
                }
            }
        }
        for v in hyponyms.values_mut() {
            v.sort();
            v.dedup();
        }
        for v in lemma_index.values_mut() {
            v.sort();
            v.dedup();
        }

        Ok(Taxonomy {
            synsets: self.synsets,
            hyponyms,
            lemma_index,
            depth,
            max_depth,
        })
    }
}

/// Longest-path depth over hypernym edges, iterative three-color DFS so a
/// cycle is reported with one of its members instead of overflowing.
fn compute_depths(synsets: &BTreeMap<SynsetId, Synset>) -> Result<BTreeMap<SynsetId, u32>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }

    let mut marks: BTreeMap<SynsetId, Mark> = synsets.keys().map(|&k| (k, Mark::White)).collect();
    let mut depth: BTreeMap<SynsetId, u32> = BTreeMap::new();
    for pos in Pos::ALL {
        depth.insert(SynsetId::virtual_root(pos), 0);
        marks.insert(SynsetId::virtual_root(pos), Mark::Black);
    }

    for &start in synsets.keys() {
        if marks[&start] != Mark::White {
            continue;
        }
        // Stack frames: (node, next hypernym index to visit).
        let mut stack: Vec<(SynsetId, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Gray);
        while let Some((node, idx)) = stack.pop() {
            let hypernyms = &synsets[&node].hypernyms;
            if idx < hypernyms.len() {
                stack.push((node, idx + 1));
                let next = hypernyms[idx].target;
                match marks[&next] {
                    Mark::White => {
                        marks.insert(next, Mark::Gray);
                        stack.push((next, 0));
                    }
                    Mark::Gray => return Err(Error::Cycle(next.to_string())),
                    Mark::Black => {}
                }
            } else {
                let d = hypernyms
                    .iter()
                    .map(|h| depth[&h.target] + 1)
                    .max()
                    .unwrap_or(0);
                depth.insert(node, d);
                marks.insert(node, Mark::Black);
            }
        }
    }
    Ok(depth)
}
