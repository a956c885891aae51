//! Path-based semantic similarity over the hypernym taxonomy.
//!
//! Conventions fixed here and mirrored by the test oracles: shortest paths
//! count edges in the undirected view of the DAG (virtual root included),
//! the least common subsumer is the deepest common ancestor with ties broken
//! by smallest id, and Leacock-Chodorow uses the per-pos longest root path D.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};

use super::{SynsetId, Taxonomy};

impl Taxonomy {
    fn check_pair(&self, a: SynsetId, b: SynsetId) -> Result<()> {
        self.synset(a)?;
        self.synset(b)?;
        if a.pos != b.pos {
            return Err(Error::PosMismatch(a.to_string(), b.to_string()));
        }
        Ok(())
    }

    /// Edge count of the shortest path between `a` and `b` in the undirected
    /// hypernym graph; 0 iff `a == b`.
    pub fn shortest_path_len(&self, a: SynsetId, b: SynsetId) -> Result<u32> {
        self.check_pair(a, b)?;
        if a == b {
            return Ok(0);
        }
        let mut dist: BTreeMap<SynsetId, u32> = BTreeMap::new();
        dist.insert(a, 0);
        let mut queue = VecDeque::from([a]);
        while let Some(node) = queue.pop_front() {
            let d = dist[&node];
            let up = self.synset(node)?.hypernyms.iter().map(|h| h.target);
            let down = self.hyponyms_of(node).iter().copied();
            for next in up.chain(down) {
                if next == b {
                    return Ok(d + 1);
                }
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(next) {
                    e.insert(d + 1);
                    queue.push_back(next);
                }
            }
        }
        // Same-pos synsets are always connected through the virtual root.
        Err(Error::UnknownSynset(b.to_string()))
    }

    /// Ancestors of `id` under hypernymy, self included, with their depths.
    pub(crate) fn ancestors(&self, id: SynsetId) -> Result<BTreeMap<SynsetId, u32>> {
        self.synset(id)?;
        let mut seen: BTreeSet<SynsetId> = BTreeSet::new();
        let mut out = BTreeMap::new();
        let mut queue = VecDeque::from([id]);
        seen.insert(id);
        while let Some(node) = queue.pop_front() {
            out.insert(node, self.depth(node)?);
            for h in &self.synset(node)?.hypernyms {
                if seen.insert(h.target) {
                    queue.push_back(h.target);
                }
            }
        }
        Ok(out)
    }

    /// Deepest common subsumer; ties by smallest `(pos, offset)`. The virtual
    /// root comes back only when no real common subsumer exists.
    pub fn lcs(&self, a: SynsetId, b: SynsetId) -> Result<SynsetId> {
        self.check_pair(a, b)?;
        let anc_a = self.ancestors(a)?;
        let anc_b = self.ancestors(b)?;
        let mut best: Option<(u32, SynsetId)> = None;
        for (&id, &d) in &anc_a {
            if !anc_b.contains_key(&id) {
                continue;
            }
            best = match best {
                None => Some((d, id)),
                Some((bd, bid)) if d > bd || (d == bd && id < bid) => Some((d, id)),
                keep => keep,
            };
        }
        // The virtual root is a common ancestor of every same-pos pair.
        Ok(best.expect("virtual root is always shared").1)
    }

    /// `1 / (shortest_path_len + 1)`, in (0, 1].
    pub fn path_similarity(&self, a: SynsetId, b: SynsetId) -> Result<f64> {
        Ok(1.0 / (f64::from(self.shortest_path_len(a, b)?) + 1.0))
    }

    /// `2 * depth(lcs) / (depth(a) + depth(b))`, in [0, 1]; 0 when only the
    /// virtual root subsumes both.
    pub fn wup_similarity(&self, a: SynsetId, b: SynsetId) -> Result<f64> {
        let lcs = self.lcs(a, b)?;
        let d_lcs = f64::from(self.depth(lcs)?);
        let d_a = f64::from(self.depth(a)?);
        let d_b = f64::from(self.depth(b)?);
        Ok(2.0 * d_lcs / (d_a + d_b))
    }

    /// `-ln((sp + 1) / (2 D))` with D the per-pos max depth; unbounded above
    /// by `ln(2D)`.
    pub fn lch_similarity(&self, a: SynsetId, b: SynsetId) -> Result<f64> {
        let sp = self.shortest_path_len(a, b)?;
        let d = self.max_depth(a.pos);
        if d < 1 {
            return Err(Error::InvalidParameter(format!(
                "Leacock-Chodorow needs at least one real {} synset",
                a.pos
            )));
        }
        Ok(-((f64::from(sp) + 1.0) / (2.0 * f64::from(d))).ln())
    }

    /// Maximum attainable Leacock-Chodorow value, `ln(2D)`.
    pub fn lch_max(&self, pos: super::Pos) -> f64 {
        (2.0 * f64::from(self.max_depth(pos))).ln()
    }

    /// Mean of path, Wu-Palmer, and Leacock-Chodorow normalized by its
    /// maximum, in [0, 1].
    pub fn combined_similarity(&self, a: SynsetId, b: SynsetId) -> Result<f64> {
        let path = self.path_similarity(a, b)?;
        let wup = self.wup_similarity(a, b)?;
        let lch = self.lch_similarity(a, b)? / self.lch_max(a.pos);
        Ok((path + wup + lch) / 3.0)
    }

    /// `(wup + path) / 2`: the pairwise metric behind prediction similarity.
    pub fn prediction_pair_similarity(&self, a: SynsetId, b: SynsetId) -> Result<f64> {
        Ok((self.wup_similarity(a, b)? + self.path_similarity(a, b)?) / 2.0)
    }
}
