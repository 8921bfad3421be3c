//! Triple-granularity change log and point-in-time reconstruction.

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{Snapshot, TxnId};
use crate::term::{Iri, Quad};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("transaction {requested} is beyond the current head {head}")]
    OutOfRange { requested: u64, head: u64 },
    #[error("invalid range: from {from} is after to {to}")]
    InvertedRange { from: u64, to: u64 },
}

/// One admitted transaction, recorded with its effective changes only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub txn: TxnId,
    pub timestamp: DateTime<Utc>,
    pub actor: Iri,
    pub inserts: BTreeSet<Quad>,
    pub deletes: BTreeSet<Quad>,
}

/// Point in time addressed by transaction id or wall-clock instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointInTime {
    Txn(TxnId),
    Time(DateTime<Utc>),
}

impl std::str::FromStr for PointInTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(n) = s.parse::<u64>() {
            return Ok(PointInTime::Txn(TxnId(n)));
        }
        DateTime::parse_from_rfc3339(s)
            .map(|t| PointInTime::Time(t.with_timezone(&Utc)))
            .map_err(|e| format!("`{s}` is neither a transaction id nor an RFC 3339 timestamp: {e}"))
    }
}

/// Net effect of a range of transactions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDelta {
    pub inserts: BTreeSet<Quad>,
    pub deletes: BTreeSet<Quad>,
}

impl NetDelta {
    pub fn is_empty(&self) -> bool {
        self.inserts.is_empty() && self.deletes.is_empty()
    }
}

/// Append-only log owned by the store.
#[derive(Clone, Default)]
pub(crate) struct HistoryLog {
    entries: im::Vector<Arc<HistoryEntry>>,
}

impl HistoryLog {
    /// Appends an entry. Only the store's write path calls this, after admission.
    pub(crate) fn record(&mut self, entry: HistoryEntry) -> Arc<HistoryEntry> {
        debug_assert_eq!(entry.txn.0, self.entries.len() as u64 + 1, "txn ids are dense");
        let entry = Arc::new(entry);
        self.entries.push_back(entry.clone());
        entry
    }

    pub(crate) fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Read-only view of the log together with the head it ends at.
#[derive(Clone)]
pub struct History {
    entries: im::Vector<Arc<HistoryEntry>>,
    head: Snapshot,
}

impl History {
    pub(crate) fn new(log: &HistoryLog, head: Snapshot) -> Self {
        Self {
            entries: log.entries.clone(),
            head,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn head(&self) -> TxnId {
        self.head.txn_id()
    }

    pub fn entries(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter().map(|e| e.as_ref())
    }

    pub fn entry(&self, txn: TxnId) -> Option<&HistoryEntry> {
        if txn.0 == 0 {
            return None;
        }
        self.entries.get(txn.0 as usize - 1).map(|e| e.as_ref())
    }

    /// Resolves a point in time to a transaction id. A timestamp selects the
    /// last transaction whose timestamp is not after it.
    pub fn resolve(&self, at: PointInTime) -> Result<TxnId, HistoryError> {
        match at {
            PointInTime::Txn(t) if t <= self.head() => Ok(t),
            PointInTime::Txn(t) => Err(HistoryError::OutOfRange {
                requested: t.0,
                head: self.head().0,
            }),
            PointInTime::Time(when) => Ok(self
                .entries
                .iter()
                .filter(|e| e.timestamp <= when)
                .map(|e| e.txn)
                .max()
                .unwrap_or_default()),
        }
    }

    /// Reconstructs the store as of `at` by reverse-applying later entries to the head.
    pub fn state_at(&self, at: PointInTime) -> Result<Snapshot, HistoryError> {
        let target = self.resolve(at)?;
        let mut snap = self.head.clone();
        for entry in self.entries.iter().rev().take_while(|e| e.txn > target) {
            for q in &entry.inserts {
                snap.data.remove(q);
            }
            for q in &entry.deletes {
                snap.data.insert(q);
            }
        }
        snap.txn = target;
        snap.graph_versions = im::OrdMap::new();
        for entry in self.entries.iter().take_while(|e| e.txn <= target) {
            for q in entry.inserts.iter().chain(entry.deletes.iter()) {
                snap.graph_versions.insert(q.graph.clone(), entry.txn);
            }
        }
        Ok(snap)
    }

    /// Net effect of transactions `from+1 ..= to`, with insert/delete cancellation.
    pub fn diff_range(&self, from: TxnId, to: TxnId) -> Result<NetDelta, HistoryError> {
        if from > to {
            return Err(HistoryError::InvertedRange { from: from.0, to: to.0 });
        }
        if to > self.head() {
            return Err(HistoryError::OutOfRange {
                requested: to.0,
                head: self.head().0,
            });
        }
        let mut net = NetDelta::default();
        for entry in self.entries.iter().filter(|e| e.txn > from && e.txn <= to) {
            for q in &entry.deletes {
                if !net.inserts.remove(q) {
                    net.deletes.insert(q.clone());
                }
            }
            for q in &entry.inserts {
                if !net.deletes.remove(q) {
                    net.inserts.insert(q.clone());
                }
            }
        }
        Ok(net)
    }
}
