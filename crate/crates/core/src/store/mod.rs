//! Transactional quad store. Every write is a [`TransactionDelta`] that must
//! pass the installed admission gate before it becomes visible.

mod dataset;
mod view;

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use dataset::{IndexPath, QuadPattern, Snapshot, TxnId};
pub use view::{DataView, TripleSource};

use crate::history::{History, HistoryEntry, HistoryLog};
use crate::shacl::{ShaclGate, ValidationReport};
use crate::term::{BlankNode, Iri, Quad, Term, TermError};
use crate::turtle::{self, TurtleError};

/// Actor recorded for ungated bootstrap loads.
pub const BOOTSTRAP_ACTOR: &str = "urn:kapps:bootstrap";

const SKOLEM_PREFIX: &str = "sk";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("transaction rejected: {} violation(s)", .0.results.len())]
    Rejected(Box<ValidationReport>),
    #[error("malformed delta: {0}")]
    MalformedDelta(String),
    #[error(transparent)]
    Parse(#[from] TurtleError),
    #[error("admission gate failed: {0}")]
    Gate(String),
}

impl From<TermError> for StoreError {
    fn from(e: TermError) -> Self {
        StoreError::MalformedDelta(e.to_string())
    }
}

/// An atomic set of insertions and deletions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDelta {
    pub inserts: BTreeSet<Quad>,
    pub deletes: BTreeSet<Quad>,
    pub actor: Iri,
    pub timestamp: DateTime<Utc>,
}

impl TransactionDelta {
    pub fn new(actor: Iri, timestamp: DateTime<Utc>) -> Self {
        Self {
            inserts: BTreeSet::new(),
            deletes: BTreeSet::new(),
            actor,
            timestamp,
        }
    }

    pub fn insert(&mut self, quad: Quad) -> &mut Self {
        self.inserts.insert(quad);
        self
    }

    pub fn delete(&mut self, quad: Quad) -> &mut Self {
        self.deletes.insert(quad);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.inserts.is_empty() && self.deletes.is_empty()
    }
}

/// Validation hook consulted for every gated commit.
pub trait AdmissionGate: Send + Sync {
    /// `post` is `base` with the effective delta applied.
    fn admit(&self, base: &Snapshot, post: &Snapshot, delta: &TransactionDelta) -> Result<(), AdmissionError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissionError {
    Violations(ValidationReport),
    /// The gate itself could not run (for example, a malformed shapes graph).
    Failed(String),
}

/// Gate that admits everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct OpenGate;

impl AdmissionGate for OpenGate {
    fn admit(&self, _: &Snapshot, _: &Snapshot, _: &TransactionDelta) -> Result<(), AdmissionError> {
        Ok(())
    }
}

/// Notifications emitted from the serialized write path.
#[derive(Debug, Clone)]
pub enum StoreEvent {
    Committed { entry: Arc<HistoryEntry>, snapshot: Snapshot },
    /// `base` is the state the rejected delta was computed against.
    Rejected { actor: Iri, report: ValidationReport, base: Snapshot },
}

/// Observer of store events. Called with the writer lock held, so listeners
/// must not write to the store.
pub trait StoreListener: Send + Sync {
    fn on_event(&self, event: &StoreEvent);
}

struct State {
    head: Snapshot,
    log: HistoryLog,
}

/// The authoritative store.
pub struct Store {
    state: RwLock<State>,
    writer: Mutex<()>,
    gate: Arc<dyn AdmissionGate>,
    listeners: RwLock<Vec<Arc<dyn StoreListener>>>,
    skolem: AtomicU64,
}

impl Default for Store {
    fn default() -> Self {
        Self::new()
    }
}

impl Store {
    /// A store gated by the SHACL shapes in [`crate::vocab::SHAPES_GRAPH`].
    pub fn new() -> Self {
        Self::with_gate(Arc::new(ShaclGate::new(crate::vocab::shapes_graph())))
    }

    pub fn with_gate(gate: Arc<dyn AdmissionGate>) -> Self {
        Self {
            state: RwLock::new(State {
                head: Snapshot::empty(),
                log: HistoryLog::default(),
            }),
            writer: Mutex::new(()),
            gate,
            listeners: RwLock::new(Vec::new()),
            skolem: AtomicU64::new(0),
        }
    }

    pub fn add_listener(&self, listener: Arc<dyn StoreListener>) {
        self.listeners.write().expect("listener lock").push(listener);
    }

    pub fn snapshot(&self) -> Snapshot {
        self.state.read().expect("state lock").head.clone()
    }

    pub fn head(&self) -> TxnId {
        self.state.read().expect("state lock").head.txn_id()
    }

    pub fn len(&self) -> usize {
        self.state.read().expect("state lock").head.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn match_pattern(&self, pattern: &QuadPattern) -> Vec<Quad> {
        self.snapshot().match_pattern(pattern)
    }

    pub fn history(&self) -> History {
        let state = self.state.read().expect("state lock");
        History::new(&state.log, state.head.clone())
    }

    /// Applies a delta through the admission gate.
    pub fn apply_transaction(&self, delta: TransactionDelta) -> Result<TxnId, StoreError> {
        self.apply_with(|_| delta)
    }

    /// Builds the delta from the head snapshot while holding the writer lock,
    /// so the delta is computed against exactly the state it will apply to.
    pub fn apply_with(&self, build: impl FnOnce(&Snapshot) -> TransactionDelta) -> Result<TxnId, StoreError> {
        let _writer = self.writer.lock().expect("writer lock");
        let base = self.snapshot();
        let delta = build(&base);
        self.commit_locked(base, delta, true)
    }

    /// Parses Turtle and applies it to `graph` without consulting the gate.
    pub fn load_graph(&self, document: &str, graph: &Iri) -> Result<TxnId, StoreError> {
        let doc = turtle::parse(document, None)?;
        let mut delta = TransactionDelta::new(Iri::from_static(BOOTSTRAP_ACTOR), Utc::now());
        delta.inserts = doc.triples.into_iter().map(|t| t.in_graph(graph)).collect();
        let _writer = self.writer.lock().expect("writer lock");
        let base = self.snapshot();
        self.commit_locked(base, delta, false)
    }

    fn commit_locked(&self, base: Snapshot, delta: TransactionDelta, gated: bool) -> Result<TxnId, StoreError> {
        for q in delta.inserts.iter().chain(delta.deletes.iter()) {
            q.validate()?;
        }
        if let Some(q) = delta.inserts.intersection(&delta.deletes).next() {
            return Err(StoreError::MalformedDelta(format!("quad both inserted and deleted: {q:?}")));
        }
        let delta = self.skolemize(delta);
        let inserts: BTreeSet<Quad> = delta.inserts.iter().filter(|q| !base.contains(q)).cloned().collect();
        let deletes: BTreeSet<Quad> = delta.deletes.iter().filter(|q| base.contains(q)).cloned().collect();
        if inserts.is_empty() && deletes.is_empty() {
            return Ok(base.txn_id());
        }
        let effective = TransactionDelta {
            inserts,
            deletes,
            actor: delta.actor,
            timestamp: delta.timestamp,
        };
        let mut post = base.with_changes(&effective.inserts, &effective.deletes);
        if gated {
            match self.gate.admit(&base, &post, &effective) {
                Ok(()) => {}
                Err(AdmissionError::Violations(report)) => {
                    self.notify(&StoreEvent::Rejected {
                        actor: effective.actor.clone(),
                        report: report.clone(),
                        base: base.clone(),
                    });
                    return Err(StoreError::Rejected(Box::new(report)));
                }
                Err(AdmissionError::Failed(msg)) => return Err(StoreError::Gate(msg)),
            }
        }
        let txn = TxnId(base.txn_id().0 + 1);
        post.txn = txn;
        for q in effective.inserts.iter().chain(effective.deletes.iter()) {
            post.graph_versions.insert(q.graph.clone(), txn);
        }
        let entry = {
            let mut state = self.state.write().expect("state lock");
            let entry = state.log.record(HistoryEntry {
                txn,
                timestamp: effective.timestamp,
                actor: effective.actor,
                inserts: effective.inserts,
                deletes: effective.deletes,
            });
            debug_assert_eq!(state.log.len() as u64, txn.0);
            state.head = post.clone();
            entry
        };
        self.notify(&StoreEvent::Committed { entry, snapshot: post });
        Ok(txn)
    }

    /// Replaces delta-scoped blank nodes with fresh store labels. Labels the
    /// store already issued are kept, so callers can refer to stored nodes.
    fn skolemize(&self, mut delta: TransactionDelta) -> TransactionDelta {
        let issued = self.skolem.load(Ordering::SeqCst);
        let mut map: HashMap<BlankNode, Term> = HashMap::new();
        let mut rewrite = |t: &Term| -> Term {
            match t {
                Term::Blank(b) if !is_issued(b, issued) => map
                    .entry(b.clone())
                    .or_insert_with(|| {
                        let n = self.skolem.fetch_add(1, Ordering::SeqCst) + 1;
                        Term::Blank(BlankNode::new(format!("{SKOLEM_PREFIX}{n}")))
                    })
                    .clone(),
                other => other.clone(),
            }
        };
        let mut fix = |set: BTreeSet<Quad>| -> BTreeSet<Quad> {
            set.into_iter()
                .map(|q| Quad {
                    subject: rewrite(&q.subject),
                    predicate: q.predicate,
                    object: rewrite(&q.object),
                    graph: q.graph,
                })
                .collect()
        };
        delta.inserts = fix(std::mem::take(&mut delta.inserts));
        delta.deletes = fix(std::mem::take(&mut delta.deletes));
        delta
    }

    fn notify(&self, event: &StoreEvent) {
        let listeners = self.listeners.read().expect("listener lock").clone();
        for l in listeners {
            l.on_event(event);
        }
    }
}

fn is_issued(b: &BlankNode, issued: u64) -> bool {
    b.label()
        .strip_prefix(SKOLEM_PREFIX)
        .and_then(|n| n.parse::<u64>().ok())
        .is_some_and(|n| n >= 1 && n <= issued)
}
