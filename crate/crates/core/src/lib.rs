//! Ontology-governed RDF knowledge graph runtime: a transactional quad store
//! whose every write passes a SHACL admission gate, an object-graph mapper
//! deriving schemas from the live ontology, service middleware, and two
//! executable demonstrators (a conveyor network and an unscrewing loop).

pub mod fixtures;
pub mod flexconveyor;
pub mod history;
pub mod middleware;
pub mod ogm;
pub mod shacl;
pub mod sparql;
pub mod store;
pub mod term;
pub mod timeseries;
pub mod turtle;
pub mod unscrew;
pub mod vocab;
pub mod wire;

pub use history::{History, HistoryEntry, NetDelta, PointInTime};
pub use store::{QuadPattern, Snapshot, Store, StoreError, TransactionDelta, TxnId};
pub use term::{BlankNode, Iri, Literal, Quad, Term, Triple};
