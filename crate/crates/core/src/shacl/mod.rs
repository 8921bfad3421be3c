//! SHACL core subset and SHACL-SPARQL constraints, used as the store's
//! admission gate.

mod report;
mod shapes;
mod validate;

use std::collections::BTreeSet;
use std::sync::Mutex;

use thiserror::Error;

pub use report::{serialize_report, ReportOptions, ValidationReport, ValidationResult};
pub use shapes::{load_shapes, load_shapes_from, NodeKind, PropertyConstraint, Shape, ShapeSet, SparqlConstraint};
pub use validate::{focus_nodes, is_instance_of, validate, ValidationScope};

use crate::sparql::SparqlError;
use crate::store::{AdmissionError, AdmissionGate, DataView, Snapshot, TransactionDelta, TripleSource, TxnId};
use crate::term::{Iri, Term};
use crate::vocab::rdfs;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShaclError {
    #[error("unsupported SHACL component {component} in shape {shape}")]
    UnsupportedComponent { component: String, shape: String },
    #[error("invalid shape {shape}: {message}")]
    InvalidShape { shape: String, message: String },
    #[error("SPARQL constraint of shape {shape}: {source}")]
    Query { shape: String, source: SparqlError },
}

/// Data graphs of a snapshot: everything except the shapes graph.
pub fn data_view<'a>(snapshot: &'a Snapshot, shapes_graph: &Iri) -> DataView<'a> {
    DataView::excluding(snapshot, [shapes_graph.clone()])
}

/// Nodes whose core-constraint results can change under `delta`: subjects and
/// objects it touches plus nodes linking to them. `None` when the delta edits
/// the class hierarchy, which can change any focus set.
pub fn affected_nodes(base: &dyn TripleSource, post: &dyn TripleSource, delta: &TransactionDelta) -> Option<BTreeSet<Term>> {
    let sub = Term::Iri(rdfs::sub_class_of());
    let mut touched = BTreeSet::new();
    for q in delta.inserts.iter().chain(delta.deletes.iter()) {
        if q.predicate == sub {
            return None;
        }
        touched.insert(q.subject.clone());
        touched.insert(q.object.clone());
    }
    let mut out = touched.clone();
    for node in &touched {
        if node.is_literal() {
            continue;
        }
        for view in [base, post] {
            view.for_each_triple(None, None, Some(node), &mut |s, _, _| {
                out.insert(s.clone());
            });
        }
    }
    Some(out)
}

/// Validates the virtual post-state of `delta` over `base`.
pub fn admission_gate(
    base: &Snapshot,
    delta: &TransactionDelta,
    shapes: &ShapeSet,
    shapes_graph: &Iri,
) -> Result<(), AdmissionError> {
    let post = base.with_changes(&delta.inserts, &delta.deletes);
    let report = validate(&data_view(&post, shapes_graph), shapes, &ValidationScope::Full)
        .map_err(|e| AdmissionError::Failed(e.to_string()))?;
    if report.has_violations() {
        Err(AdmissionError::Violations(report))
    } else {
        Ok(())
    }
}

/// Store gate that validates every candidate post-state against the shapes
/// currently held in the shapes graph.
pub struct ShaclGate {
    shapes_graph: Iri,
    scoped: bool,
    cache: Mutex<Option<(TxnId, std::sync::Arc<ShapeSet>)>>,
}

impl ShaclGate {
    pub fn new(shapes_graph: Iri) -> Self {
        Self {
            shapes_graph,
            scoped: false,
            cache: Mutex::new(None),
        }
    }

    /// Restricts core-constraint checks to nodes affected by each delta.
    pub fn scoped(mut self, scoped: bool) -> Self {
        self.scoped = scoped;
        self
    }

    fn shapes(&self, post: &Snapshot) -> Result<std::sync::Arc<ShapeSet>, ShaclError> {
        let version = post.graph_version(&self.shapes_graph);
        let mut cache = self.cache.lock().expect("shape cache lock");
        if let Some((v, s)) = cache.as_ref() {
            if *v == version {
                return Ok(s.clone());
            }
        }
        let shapes = std::sync::Arc::new(load_shapes(post, &self.shapes_graph)?);
        *cache = Some((version, shapes.clone()));
        Ok(shapes)
    }
}

impl AdmissionGate for ShaclGate {
    fn admit(&self, base: &Snapshot, post: &Snapshot, delta: &TransactionDelta) -> Result<(), AdmissionError> {
        let touches_shapes = delta
            .inserts
            .iter()
            .chain(delta.deletes.iter())
            .any(|q| q.graph == Term::Iri(self.shapes_graph.clone()));
        let shapes = if touches_shapes {
            std::sync::Arc::new(load_shapes(post, &self.shapes_graph).map_err(|e| AdmissionError::Failed(e.to_string()))?)
        } else {
            self.shapes(post).map_err(|e| AdmissionError::Failed(e.to_string()))?
        };
        if shapes.is_empty() {
            return Ok(());
        }
        let post_view = data_view(post, &self.shapes_graph);
        let scope = if self.scoped {
            let base_view = data_view(base, &self.shapes_graph);
            match affected_nodes(&base_view, &post_view, delta) {
                Some(nodes) => ValidationScope::FocusNodes(nodes),
                None => ValidationScope::Full,
            }
        } else {
            ValidationScope::Full
        };
        let report = validate(&post_view, &shapes, &scope).map_err(|e| AdmissionError::Failed(e.to_string()))?;
        if report.has_violations() {
            Err(AdmissionError::Violations(report))
        } else {
            Ok(())
        }
    }
}
