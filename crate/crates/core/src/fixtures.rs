//! Bundled ontologies and shapes, and helpers to load them into a store.

use crate::store::{Store, StoreError, TxnId};
use crate::vocab::{ontology_graph, shapes_graph};

pub const CORE_ONTOLOGY: &str = include_str!("../fixtures/core.ttl");
pub const SERVICE_ONTOLOGY: &str = include_str!("../fixtures/service.ttl");
pub const FLEXCONVEYOR_ONTOLOGY: &str = include_str!("../fixtures/flexconveyor.ttl");
pub const UNSCREWING_ONTOLOGY: &str = include_str!("../fixtures/unscrewing.ttl");
pub const FLEXCONVEYOR_SHAPES: &str = include_str!("../fixtures/flexconveyor_shapes.ttl");
/// The InTransit possession shape on its own, with inline prefix declarations.
pub const INTRANSIT_SHAPE: &str = include_str!("../fixtures/intransit_possession_shape.ttl");

/// Named bundled documents, for lookup by file name from the command line.
pub const BUNDLED: &[(&str, &str)] = &[
    ("core.ttl", CORE_ONTOLOGY),
    ("service.ttl", SERVICE_ONTOLOGY),
    ("flexconveyor.ttl", FLEXCONVEYOR_ONTOLOGY),
    ("unscrewing.ttl", UNSCREWING_ONTOLOGY),
    ("flexconveyor_shapes.ttl", FLEXCONVEYOR_SHAPES),
    ("intransit_possession_shape.ttl", INTRANSIT_SHAPE),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads every bundled ontology into the ontology graph.
pub fn load_ontologies(store: &Store) -> Result<TxnId, StoreError> {
    let mut txn = store.head();
    for doc in [CORE_ONTOLOGY, SERVICE_ONTOLOGY, FLEXCONVEYOR_ONTOLOGY, UNSCREWING_ONTOLOGY] {
        txn = store.load_graph(doc, &ontology_graph())?;
    }
    Ok(txn)
}

pub fn load_flexconveyor_shapes(store: &Store) -> Result<TxnId, StoreError> {
    store.load_graph(FLEXCONVEYOR_SHAPES, &shapes_graph())
}

/// A gated store with all ontologies and the conveyor shapes loaded.
pub fn bootstrap_store() -> Result<Store, StoreError> {
    let store = Store::new();
    load_ontologies(&store)?;
    load_flexconveyor_shapes(&store)?;
    Ok(store)
}
