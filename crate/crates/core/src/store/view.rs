use std::collections::BTreeSet;

use super::Snapshot;
use crate::term::{Iri, Term, Triple};

/// Triple-level read access used by the query and validation engines.
pub trait TripleSource {
    fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    );

    fn triples(&self, s: Option<&Term>, p: Option<&Term>, o: Option<&Term>) -> Vec<Triple> {
        let mut v = Vec::new();
        self.for_each_triple(s, p, o, &mut |a, b, c| {
            v.push(Triple {
                subject: a.clone(),
                predicate: b.clone(),
                object: c.clone(),
            })
        });
        v
    }

    fn objects(&self, s: &Term, p: &Term) -> Vec<Term> {
        let mut v = Vec::new();
        self.for_each_triple(Some(s), Some(p), None, &mut |_, _, o| v.push(o.clone()));
        v
    }

    fn subjects(&self, p: &Term, o: &Term) -> Vec<Term> {
        let mut v = Vec::new();
        self.for_each_triple(None, Some(p), Some(o), &mut |s, _, _| v.push(s.clone()));
        v
    }

    fn has(&self, s: &Term, p: &Term, o: &Term) -> bool {
        let mut found = false;
        self.for_each_triple(Some(s), Some(p), Some(o), &mut |_, _, _| found = true);
        found
    }
}

#[derive(Clone)]
enum GraphSelection {
    All,
    Excluding(BTreeSet<Term>),
    Only(BTreeSet<Term>),
}

/// The union of selected named graphs of a snapshot, as a set of triples.
#[derive(Clone)]
pub struct DataView<'a> {
    snapshot: &'a Snapshot,
    selection: GraphSelection,
}

impl<'a> DataView<'a> {
    pub fn all(snapshot: &'a Snapshot) -> Self {
        Self {
            snapshot,
            selection: GraphSelection::All,
        }
    }

    pub fn excluding(snapshot: &'a Snapshot, graphs: impl IntoIterator<Item = Iri>) -> Self {
        Self {
            snapshot,
            selection: GraphSelection::Excluding(graphs.into_iter().map(Term::Iri).collect()),
        }
    }

    pub fn only(snapshot: &'a Snapshot, graphs: impl IntoIterator<Item = Iri>) -> Self {
        Self {
            snapshot,
            selection: GraphSelection::Only(graphs.into_iter().map(Term::Iri).collect()),
        }
    }

    pub fn snapshot(&self) -> &Snapshot {
        self.snapshot
    }

    fn selected(&self, g: &Term) -> bool {
        match &self.selection {
            GraphSelection::All => true,
            GraphSelection::Excluding(x) => !x.contains(g),
            GraphSelection::Only(x) => x.contains(g),
        }
    }
}

impl TripleSource for DataView<'_> {
    fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        self.snapshot.data.for_each_triple(s, p, o, &|g| self.selected(g), out);
    }
}

impl TripleSource for Snapshot {
    fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        self.data.for_each_triple(s, p, o, &|_| true, out);
    }
}

/// A plain in-memory triple set; used by tests and stateless validation.
impl TripleSource for [Triple] {
    fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        let mut seen = BTreeSet::new();
        for t in self {
            if s.is_none_or(|x| x == &t.subject)
                && p.is_none_or(|x| x == &t.predicate)
                && o.is_none_or(|x| x == &t.object)
                && seen.insert(t)
            {
                out(&t.subject, &t.predicate, &t.object);
            }
        }
    }
}

impl TripleSource for Vec<Triple> {
    fn for_each_triple(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
        out: &mut dyn FnMut(&Term, &Term, &Term),
    ) {
        self.as_slice().for_each_triple(s, p, o, out);
    }
}
