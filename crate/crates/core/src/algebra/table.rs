use rustc_hash::FxHashMap;

use crate::rdf::TermId;

/// Marks a variable slot that a binding leaves unbound.
pub const UNBOUND: TermId = TermId(u32::MAX);

/// Fixed-width rows of variable bindings, stored flat. Slot `i` of every row
/// belongs to the query's `i`-th variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingTable {
    width: usize,
    data: Vec<TermId>,
    /// Slots bound in every row.
    domain: Vec<usize>,
}

impl BindingTable {
    pub fn new(width: usize, domain: Vec<usize>) -> Self {
        assert!(width > 0, "a query binds at least one variable");
        Self {
            width,
            data: Vec::new(),
            domain,
        }
    }

    /// The join identity: one row binding nothing.
    pub fn unit(width: usize) -> Self {
        assert!(width > 0, "a query binds at least one variable");
        Self {
            width,
            data: vec![UNBOUND; width],
            domain: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn domain(&self) -> &[usize] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[TermId] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[TermId]> {
        self.data.chunks_exact(self.width)
    }

    pub fn push(&mut self, row: &[TermId]) {
        debug_assert_eq!(row.len(), self.width);
        self.data.extend_from_slice(row);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&[TermId]) -> bool) {
        let w = self.width;
        let mut out = Vec::with_capacity(self.data.len());
        for r in self.data.chunks_exact(w) {
            if keep(r) {
                out.extend_from_slice(r);
            }
        }
        self.data = out;
    }

    /// Adds all rows of `other`; the domain shrinks to the common part.
    pub fn append(&mut self, other: &BindingTable) {
        assert_eq!(self.width, other.width);
        if self.data.is_empty() {
            self.domain = other.domain.clone();
        } else {
            self.domain.retain(|s| other.domain.contains(s));
        }
        self.data.extend_from_slice(&other.data);
    }

    pub fn approx_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<TermId>()
    }
}

/// Join key over up to four shared slots; longer keys fall back to a nested loop.
type Key = [TermId; 4];

fn key(row: &[TermId], slots: &[usize]) -> Key {
    let mut k = [UNBOUND; 4];
    for (i, &s) in slots.iter().enumerate() {
        k[i] = row[s];
    }
    k
}

fn compatible(a: &[TermId], b: &[TermId]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| *x == UNBOUND || *y == UNBOUND || x == y)
}

fn merge_into(out: &mut Vec<TermId>, a: &[TermId], b: &[TermId]) {
    out.extend(a.iter().zip(b).map(|(x, y)| if *x == UNBOUND { *y } else { *x }));
}

/// Natural join on shared variables. Hash join on the shared bound slots,
/// building on the smaller input; nested loop when nothing is shared.
///
/// Probes: one per row of the probing side plus one per bucket entry examined;
/// a nested loop costs one per pair.
pub fn join_tables(a: &BindingTable, b: &BindingTable, probes: &mut u64) -> BindingTable {
    assert_eq!(a.width, b.width, "joined tables must share a variable layout");
    let w = a.width;
    let mut domain: Vec<usize> = a.domain.clone();
    domain.extend(b.domain.iter().filter(|s| !a.domain.contains(s)));
    domain.sort_unstable();
    let mut out = BindingTable::new(w, domain);
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let shared: Vec<usize> = a.domain.iter().copied().filter(|s| b.domain.contains(s)).collect();
    if shared.is_empty() || shared.len() > 4 {
        for ra in a.rows() {
            for rb in b.rows() {
                *probes += 1;
                if compatible(ra, rb) {
                    merge_into(&mut out.data, ra, rb);
                }
            }
        }
        return out;
    }
    let (build, probe) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut index: FxHashMap<Key, Vec<u32>> = FxHashMap::default();
    for (i, r) in build.rows().enumerate() {
        index.entry(key(r, &shared)).or_default().push(i as u32);
    }
    for rp in probe.rows() {
        *probes += 1;
        if let Some(bucket) = index.get(&key(rp, &shared)) {
            for &i in bucket {
                *probes += 1;
                let rb = build.row(i as usize);
                if compatible(rp, rb) {
                    merge_into(&mut out.data, rp, rb);
                }
            }
        }
    }
    out
}
