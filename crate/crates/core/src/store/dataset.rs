use im::{OrdMap, OrdSet};

use crate::term::{Iri, Quad, Term};

type Index = OrdMap<Term, OrdMap<Term, OrdSet<Term>>>;

/// Transaction identifier. `TxnId(0)` is the empty store before any commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct TxnId(pub u64);

impl std::fmt::Display for TxnId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which physical access path answers a pattern. `Auto` picks the index
/// matching the bound positions; the others exist for coherence checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexPath {
    Auto,
    Spo,
    Pos,
    Osp,
    Scan,
}

/// A quad pattern; `None` is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuadPattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
    pub graph: Option<Term>,
}

impl QuadPattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn subject(mut self, t: impl Into<Term>) -> Self {
        self.subject = Some(t.into());
        self
    }

    pub fn predicate(mut self, t: impl Into<Term>) -> Self {
        self.predicate = Some(t.into());
        self
    }

    pub fn object(mut self, t: impl Into<Term>) -> Self {
        self.object = Some(t.into());
        self
    }

    pub fn graph(mut self, t: impl Into<Term>) -> Self {
        self.graph = Some(t.into());
        self
    }

    pub fn matches(&self, q: &Quad) -> bool {
        self.subject.as_ref().is_none_or(|s| s == &q.subject)
            && self.predicate.as_ref().is_none_or(|p| p == &q.predicate)
            && self.object.as_ref().is_none_or(|o| o == &q.object)
            && self.graph.as_ref().is_none_or(|g| g == &q.graph)
    }
}

#[derive(Clone, Default)]
struct GraphIndex {
    spo: Index,
    pos: Index,
    osp: Index,
    len: usize,
}

fn index_insert(idx: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    let mut inner = idx.get(a).cloned().unwrap_or_default();
    let mut set = inner.get(b).cloned().unwrap_or_default();
    let fresh = set.insert(c.clone()).is_none();
    if fresh {
        inner.insert(b.clone(), set);
        idx.insert(a.clone(), inner);
    }
    fresh
}

fn index_remove(idx: &mut Index, a: &Term, b: &Term, c: &Term) -> bool {
    let Some(mut inner) = idx.get(a).cloned() else {
        return false;
    };
    let Some(mut set) = inner.get(b).cloned() else {
        return false;
    };
    if set.remove(c).is_none() {
        return false;
    }
    if set.is_empty() {
        inner.remove(b);
    } else {
        inner.insert(b.clone(), set);
    }
    if inner.is_empty() {
        idx.remove(a);
    } else {
        idx.insert(a.clone(), inner);
    }
    true
}

/// Walks an index with up to two leading bound keys, yielding (a, b, c).
fn index_walk(idx: &Index, a: Option<&Term>, b: Option<&Term>, out: &mut dyn FnMut(&Term, &Term, &Term)) {
    let mut inner_walk = |ka: &Term, inner: &OrdMap<Term, OrdSet<Term>>| match b {
        Some(kb) => {
            if let Some(set) = inner.get(kb) {
                for c in set.iter() {
                    out(ka, kb, c);
                }
            }
        }
        None => {
            for (kb, set) in inner.iter() {
                for c in set.iter() {
                    out(ka, kb, c);
                }
            }
        }
    };
    match a {
        Some(ka) => {
            if let Some(inner) = idx.get(ka) {
                inner_walk(ka, inner);
            }
        }
        None => {
            for (ka, inner) in idx.iter() {
                inner_walk(ka, inner);
            }
        }
    }
}

impl GraphIndex {
    fn insert(&mut self, s: &Term, p: &Term, o: &Term) -> bool {
        if index_insert(&mut self.spo, s, p, o) {
            index_insert(&mut self.pos, p, o, s);
            index_insert(&mut self.osp, o, s, p);
            self.len += 1;
            true
        } else {
            false
        }
    }

    fn remove(&mut self, s: &Term, p: &Term, o: &Term) -> bool {
        if index_remove(&mut self.spo, s, p, o) {
            index_remove(&mut self.pos, p, o, s);
            index_remove(&mut self.osp, o, s, p);
            self.len -= 1;
            true
        } else {
            false
        }
    }

    fn contains(&self, s: &Term, p: &Term, o: &Term) -> bool {
        self.spo
            .get(s)
            .and_then(|inner| inner.get(p))
            .is_some_and(|set| set.contains(o))
    }

    fn matching(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        path: IndexPath,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        let path = match path {
            IndexPath::Auto => match (s.is_some(), p.is_some(), o.is_some()) {
                (true, _, false) | (true, true, true) => IndexPath::Spo,
                (true, false, true) => IndexPath::Osp,
                (false, true, _) => IndexPath::Pos,
                (false, false, true) => IndexPath::Osp,
                (false, false, false) => IndexPath::Spo,
            },
            other => other,
        };
        let keep = |ts: &Term, tp: &Term, to: &Term| {
            s.is_none_or(|x| x == ts) && p.is_none_or(|x| x == tp) && o.is_none_or(|x| x == to)
        };
        match path {
            IndexPath::Spo => index_walk(&self.spo, s, s.and(p), &mut |a, b, c| {
                if keep(a, b, c) {
                    out(a, b, c)
                }
            }),
            IndexPath::Pos => index_walk(&self.pos, p, p.and(o), &mut |a, b, c| {
                if keep(c, a, b) {
                    out(c, a, b)
                }
            }),
            IndexPath::Osp => index_walk(&self.osp, o, o.and(s), &mut |a, b, c| {
                if keep(b, c, a) {
                    out(b, c, a)
                }
            }),
            IndexPath::Scan | IndexPath::Auto => index_walk(&self.spo, None, None, &mut |a, b, c| {
                if keep(a, b, c) {
                    out(a, b, c)
                }
            }),
        }
    }
}

/// Persistent indexed quad set. Cloning is O(1); mutations share structure.
#[derive(Clone, Default)]
pub(crate) struct Dataset {
    graphs: OrdMap<Term, GraphIndex>,
    len: usize,
}

impl Dataset {
    pub(crate) fn insert(&mut self, q: &Quad) -> bool {
        let mut g = self.graphs.get(&q.graph).cloned().unwrap_or_default();
        if g.insert(&q.subject, &q.predicate, &q.object) {
            self.graphs.insert(q.graph.clone(), g);
            self.len += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn remove(&mut self, q: &Quad) -> bool {
        let Some(mut g) = self.graphs.get(&q.graph).cloned() else {
            return false;
        };
        if !g.remove(&q.subject, &q.predicate, &q.object) {
            return false;
        }
        if g.len == 0 {
            self.graphs.remove(&q.graph);
        } else {
            self.graphs.insert(q.graph.clone(), g);
        }
        self.len -= 1;
        true
    }

    pub(crate) fn contains(&self, q: &Quad) -> bool {
        self.graphs
            .get(&q.graph)
            .is_some_and(|g| g.contains(&q.subject, &q.predicate, &q.object))
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn graph_names(&self) -> impl Iterator<Item = &Term> {
        self.graphs.keys()
    }

    pub(crate) fn graph_len(&self, g: &Term) -> usize {
        self.graphs.get(g).map_or(0, |x| x.len)
    }

    pub(crate) fn for_each_match(&self, pattern: &QuadPattern, path: IndexPath, out: &mut dyn FnMut(Quad)) {
        let mut visit = |graph: &Term, index: &GraphIndex| {
            index.matching(
                pattern.subject.as_ref(),
                pattern.predicate.as_ref(),
                pattern.object.as_ref(),
                path,
                &mut |s, p, o| {
                    out(Quad {
                        subject: s.clone(),
                        predicate: p.clone(),
                        object: o.clone(),
                        graph: graph.clone(),
                    })
                },
            )
        };
        match &pattern.graph {
            Some(g) => {
                if let Some(index) = self.graphs.get(g) {
                    visit(g, index);
                }
            }
            None => {
                for (g, index) in self.graphs.iter() {
                    visit(g, index);
                }
            }
        }
    }

    /// Matches triples in the given graphs (all when `graphs` is `None`),
    /// reporting each distinct triple once.
    pub(crate) fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        graphs: &dyn Fn(&Term) -> bool,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        let selected: Vec<&GraphIndex> = self
            .graphs
            .iter()
            .filter(|(g, _)| graphs(g))
            .map(|(_, idx)| idx)
            .collect();
        match selected.as_slice() {
            [] => {}
            [only] => only.matching(s, p, o, IndexPath::Auto, out),
            many => {
                let mut seen = std::collections::BTreeSet::new();
                for idx in many {
                    idx.matching(s, p, o, IndexPath::Auto, &mut |a, b, c| {
                        if seen.insert((a.clone(), b.clone(), c.clone())) {
                            out(a, b, c);
                        }
                    });
                }
            }
        }
    }
}

/// Immutable view of the store at one transaction boundary.
#[derive(Clone, Default)]
pub struct Snapshot {
    pub(crate) data: Dataset,
    pub(crate) txn: TxnId,
    pub(crate) graph_versions: OrdMap<Term, TxnId>,
}

impl Snapshot {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn txn_id(&self) -> TxnId {
        self.txn
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.data.contains(quad)
    }

    pub fn match_pattern(&self, pattern: &QuadPattern) -> Vec<Quad> {
        self.match_via(pattern, IndexPath::Auto)
    }

    /// Answers a pattern through a specific access path.
    pub fn match_via(&self, pattern: &QuadPattern, path: IndexPath) -> Vec<Quad> {
        let mut out = Vec::new();
        self.data.for_each_match(pattern, path, &mut |q| out.push(q));
        out
    }

    pub fn quads(&self) -> Vec<Quad> {
        self.match_pattern(&QuadPattern::any())
    }

    pub fn graphs(&self) -> Vec<Iri> {
        self.data.graph_names().filter_map(|g| g.as_iri().cloned()).collect()
    }

    pub fn graph_len(&self, graph: &Iri) -> usize {
        self.data.graph_len(&Term::Iri(graph.clone()))
    }

    /// Last transaction that changed `graph` (0 when never written).
    pub fn graph_version(&self, graph: &Iri) -> TxnId {
        self.graph_versions
            .get(&Term::Iri(graph.clone()))
            .copied()
            .unwrap_or_default()
    }

    /// A new snapshot with `inserts` added and `deletes` removed; the
    /// transaction id is left unchanged (virtual post-state).
    pub fn with_changes<'a>(
        &self,
        inserts: impl IntoIterator<Item = &'a Quad>,
        deletes: impl IntoIterator<Item = &'a Quad>,
    ) -> Snapshot {
        let mut next = self.clone();
        for q in deletes {
            next.data.remove(q);
        }
        for q in inserts {
            next.data.insert(q);
        }
        next
    }
}

impl std::fmt::Debug for Snapshot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Snapshot")
            .field("txn", &self.txn)
            .field("len", &self.len())
            .finish()
    }
}
