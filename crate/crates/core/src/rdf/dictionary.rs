//! Engine-wide term dictionary.
//!
//! Every term seen by the engines (stream data, static data, query constants)
//! is interned here once, so joins and filters compare `u32` ids instead of
//! strings. Ids are dense, allocated in first-seen order, and never reused.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{RdfError, Term};

/// Dense identifier of an interned [`Term`].
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

// Per-entry overhead beyond the term itself: Arc header, map slot, vec slot.
const ENTRY_OVERHEAD: usize = 16 + 24 + 8;

#[derive(Default)]
struct Inner {
    ids: FxHashMap<Arc<Term>, TermId>,
    terms: Vec<Arc<Term>>,
}

/// Concurrent interner. Readers take a shared lock; the write lock is only
/// taken for terms that are not yet present.
#[derive(Default)]
pub struct Dictionary {
    inner: RwLock<Inner>,
    bytes: AtomicUsize,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared() -> Arc<Self> {
        Arc::new(Self::new())
    }

    pub fn intern(&self, term: &Term) -> TermId {
        if let Some(id) = self.lookup(term) {
            return id;
        }
        let mut inner = self.inner.write().expect("dictionary lock poisoned");
        // Another writer may have won the race between the two locks.
        if let Some(&id) = inner.ids.get(term) {
            return id;
        }
        let id = TermId(u32::try_from(inner.terms.len()).expect("dictionary overflow"));
        let term = Arc::new(term.clone());
        inner.terms.push(Arc::clone(&term));
        self.bytes
            .fetch_add(term.approx_bytes() + ENTRY_OVERHEAD, Ordering::Relaxed);
        inner.ids.insert(term, id);
        id
    }

    /// Id of an already interned term, without inserting.
    pub fn lookup(&self, term: &Term) -> Option<TermId> {
        self.inner
            .read()
            .expect("dictionary lock poisoned")
            .ids
            .get(term)
            .copied()
    }

    pub fn resolve(&self, id: TermId) -> Result<Arc<Term>, RdfError> {
        self.inner
            .read()
            .expect("dictionary lock poisoned")
            .terms
            .get(id.index())
            .cloned()
            .ok_or(RdfError::UnknownId(id.0))
    }

    /// Runs `f` on the term without cloning the handle.
    pub fn with_term<R>(&self, id: TermId, f: impl FnOnce(&Term) -> R) -> Result<R, RdfError> {
        let inner = self.inner.read().expect("dictionary lock poisoned");
        inner
            .terms
            .get(id.index())
            .map(|t| f(t))
            .ok_or(RdfError::UnknownId(id.0))
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("dictionary lock poisoned").terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Approximate bytes held by interned terms.
    pub fn approx_bytes(&self) -> usize {
        self.bytes.load(Ordering::Relaxed)
    }
}

impl std::fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dictionary")
            .field("len", &self.len())
            .field("approx_bytes", &self.approx_bytes())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn intern_is_idempotent() {
        let d = Dictionary::new();
        let a = d.intern(&Term::iri("http://example.org/water/hasTag"));
        let b = d.intern(&Term::iri("http://example.org/water/hasTag"));
        assert_eq!(a, b);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn ids_are_dense_in_first_seen_order() {
        let d = Dictionary::new();
        let ids: Vec<_> = (0..10)
            .map(|i| d.intern(&Term::iri(format!("http://x/{i}"))))
            .collect();
        assert_eq!(ids, (0..10).map(TermId).collect::<Vec<_>>());
        // re-interning in a different order changes nothing
        assert_eq!(d.intern(&Term::iri("http://x/3")), TermId(3));
    }

    #[test]
    fn resolve_round_trip_and_unknown_id() {
        let d = Dictionary::new();
        let id = d.intern(&Term::iri("ex:hasTag"));
        assert_eq!(*d.resolve(id).unwrap(), Term::iri("ex:hasTag"));
        let empty = Dictionary::new();
        assert!(matches!(
            empty.resolve(TermId(999)),
            Err(RdfError::UnknownId(999))
        ));
    }

    #[test]
    fn resolve_all_reproduces_insertion_log() {
        let d = Dictionary::new();
        let mut log = Vec::new();
        for i in 0..500u32 {
            let t = match i % 3 {
                0 => Term::iri(format!("http://x/{}", i % 97)),
                1 => Term::string(format!("s{}", i % 41)),
                _ => Term::integer(i64::from(i % 13)),
            };
            if !log.contains(&t) {
                log.push(t.clone());
            }
            d.intern(&t);
        }
        let resolved: Vec<Term> = (0..d.len() as u32)
            .map(|i| (*d.resolve(TermId(i)).unwrap()).clone())
            .collect();
        assert_eq!(resolved, log);
    }

    #[test]
    fn concurrent_interning_agrees() {
        let d = Arc::new(Dictionary::new());
        let handles: Vec<_> = (0..8)
            .map(|k| {
                let d = Arc::clone(&d);
                std::thread::spawn(move || {
                    (0..2000)
                        .map(|i| {
                            let i = (i * 7 + k) % 500;
                            (i, d.intern(&Term::iri(format!("http://c/{i}"))))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut seen = std::collections::HashMap::new();
        for h in handles {
            for (i, id) in h.join().unwrap() {
                assert_eq!(*seen.entry(i).or_insert(id), id);
            }
        }
        assert_eq!(d.len(), 500);
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            "[a-z]{1,12}".prop_map(|s| Term::iri(format!("http://p/{s}"))),
            ".{0,12}".prop_map(Term::string),
            any::<i32>().prop_map(|i| Term::integer(i64::from(i))),
            "[a-z0-9]{1,6}".prop_map(Term::blank),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn interning_is_a_bijection(terms in proptest::collection::vec(arb_term(), 1000)) {
            let d = Dictionary::new();
            let ids: Vec<_> = terms.iter().map(|t| d.intern(t)).collect();
            for (t, id) in terms.iter().zip(&ids) {
                prop_assert_eq!(&*d.resolve(*id).unwrap(), t);
            }
            for (i, a) in terms.iter().enumerate() {
                for (j, b) in terms.iter().enumerate().skip(i + 1).take(20) {
                    prop_assert_eq!(a == b, ids[i] == ids[j]);
                }
            }
        }
    }
}
