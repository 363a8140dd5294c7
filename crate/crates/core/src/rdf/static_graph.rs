use rustc_hash::{FxHashMap, FxHashSet};

use super::{TermId, Triple};

/// Immutable background graph with lookup indexes on `p`, `(s, p)` and `(p, o)`.
#[derive(Debug, Default, Clone)]
pub struct StaticGraph {
    triples: Vec<Triple>,
    by_p: FxHashMap<TermId, Vec<u32>>,
    by_sp: FxHashMap<(TermId, TermId), Vec<u32>>,
    by_po: FxHashMap<(TermId, TermId), Vec<u32>>,
}

impl StaticGraph {
    /// Builds the graph; duplicates collapse.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut seen = FxHashSet::default();
        let triples: Vec<Triple> = triples.into_iter().filter(|t| seen.insert(*t)).collect();
        let mut graph = StaticGraph {
            triples,
            ..Default::default()
        };
        for (i, t) in graph.triples.iter().enumerate() {
            let i = i as u32;
            graph.by_p.entry(t.p).or_default().push(i);
            graph.by_sp.entry((t.s, t.p)).or_default().push(i);
            graph.by_po.entry((t.p, t.o)).or_default().push(i);
        }
        graph
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.by_sp
            .get(&(t.s, t.p))
            .is_some_and(|ix| ix.iter().any(|&i| self.triples[i as usize] == *t))
    }

    /// All triples matching the bound positions. Uses an index whenever the
    /// predicate is bound, otherwise falls back to a scan.
    pub fn lookup(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> Vec<Triple> {
        let from_index = |ix: Option<&Vec<u32>>| -> Vec<Triple> {
            ix.map(|ix| {
                ix.iter()
                    .map(|&i| self.triples[i as usize])
                    .filter(|t| s.is_none_or(|s| t.s == s) && o.is_none_or(|o| t.o == o))
                    .collect()
            })
            .unwrap_or_default()
        };
        match (s, p, o) {
            (Some(s), Some(p), _) => from_index(self.by_sp.get(&(s, p))),
            (None, Some(p), Some(o)) => from_index(self.by_po.get(&(p, o))),
            (None, Some(p), None) => from_index(self.by_p.get(&p)),
            _ => self
                .triples
                .iter()
                .filter(|t| {
                    s.is_none_or(|s| t.s == s)
                        && p.is_none_or(|p| t.p == p)
                        && o.is_none_or(|o| t.o == o)
                })
                .copied()
                .collect(),
        }
    }

    /// Number of candidates an indexed lookup would visit; used for probe counts.
    pub fn lookup_cost(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> usize {
        match (s, p, o) {
            (Some(s), Some(p), _) => self.by_sp.get(&(s, p)).map_or(0, Vec::len),
            (None, Some(p), Some(o)) => self.by_po.get(&(p, o)).map_or(0, Vec::len),
            (None, Some(p), None) => self.by_p.get(&p).map_or(0, Vec::len),
            _ => self.triples.len(),
        }
    }

    /// Bytes held by triples and indexes (terms live in the dictionary).
    pub fn approx_bytes(&self) -> usize {
        let t = std::mem::size_of::<Triple>();
        let idx = 3 * self.triples.len() * 4;
        let keys = (self.by_p.len() + self.by_sp.len() + self.by_po.len()) * 40;
        self.triples.len() * t + idx + keys
    }
}
