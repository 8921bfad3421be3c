use std::collections::{BTreeMap, BTreeSet};

use super::report::{ValidationReport, ValidationResult};
use super::shapes::{subclass_closure, PropertyConstraint, Shape, ShapeSet, SparqlConstraint};
use super::ShaclError;
use crate::sparql::{self, Binding, EvalOptions, Var};
use crate::store::TripleSource;
use crate::term::{Iri, Term};
use crate::vocab::{rdf, sh};

/// Which focus nodes to check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationScope {
    Full,
    /// Only these focus nodes for core constraints; SPARQL constraints are
    /// always checked for every target.
    FocusNodes(BTreeSet<Term>),
}

/// Focus nodes of a shape: instances of any target class or its subclasses.
pub fn focus_nodes(view: &dyn TripleSource, shape: &Shape) -> BTreeSet<Term> {
    let ty = Term::Iri(rdf::type_());
    let mut out = BTreeSet::new();
    for target in &shape.target_classes {
        for class in subclass_closure(view, target) {
            out.extend(view.subjects(&ty, &class));
        }
    }
    out
}

/// True when `node` is typed with `class` or one of its subclasses.
pub fn is_instance_of(view: &dyn TripleSource, node: &Term, class: &Iri) -> bool {
    let closure = subclass_closure(view, class);
    view.objects(node, &rdf::type_().into())
        .iter()
        .any(|t| closure.contains(t))
}

pub fn validate(view: &dyn TripleSource, shapes: &ShapeSet, scope: &ValidationScope) -> Result<ValidationReport, ShaclError> {
    let mut results = BTreeSet::new();
    let mut sources = BTreeMap::new();
    for shape in &shapes.shapes {
        let focus = focus_nodes(view, shape);
        for pc in &shape.properties {
            for node in &focus {
                if let ValidationScope::FocusNodes(set) = scope {
                    if !set.contains(node) {
                        continue;
                    }
                }
                let before = results.len();
                check_property(view, shape, pc, node, &mut results);
                if results.len() > before && pc.id.is_blank() {
                    sources.insert(pc.id.clone(), pc.description.clone());
                }
            }
        }
        for sc in &shape.sparql {
            for node in &focus {
                check_sparql(view, shape, sc, node, &mut results)?;
            }
        }
    }
    let results: Vec<ValidationResult> = results.into_iter().collect();
    sources.retain(|id, _| results.iter().any(|r| &r.source_shape == id));
    Ok(ValidationReport {
        conforms: results.is_empty(),
        results,
        source_shapes: sources,
    })
}

fn result(shape: &Shape, pc: &PropertyConstraint, focus: &Term, component: Iri, value: Option<Term>, default: String) -> ValidationResult {
    ValidationResult {
        focus_node: focus.clone(),
        result_path: Some(pc.path.clone()),
        value,
        source_constraint_component: component,
        result_severity: pc.severity.clone(),
        result_message: pc.message.clone().or_else(|| shape.message.clone()).unwrap_or(default),
        source_shape: pc.id.clone(),
    }
}

fn check_property(
    view: &dyn TripleSource,
    shape: &Shape,
    pc: &PropertyConstraint,
    focus: &Term,
    out: &mut BTreeSet<ValidationResult>,
) {
    let values = view.objects(focus, &Term::Iri(pc.path.clone()));
    let n = values.len() as u64;
    if let Some(max) = pc.max_count {
        if n > max {
            out.insert(result(shape, pc, focus, sh::max_count_component(), None, format!("More than {max} values on {}", pc.path)));
        }
    }
    if let Some(min) = pc.min_count {
        if n < min {
            out.insert(result(shape, pc, focus, sh::min_count_component(), None, format!("Less than {min} values on {}", pc.path)));
        }
    }
    for v in &values {
        if let Some(dt) = &pc.datatype {
            let ok = v
                .as_literal()
                .is_some_and(|l| l.datatype() == dt && l.is_well_formed());
            if !ok {
                out.insert(result(shape, pc, focus, sh::datatype_component(), Some(v.clone()), format!("Value does not have datatype {dt}")));
            }
        }
        if let Some(class) = &pc.class {
            if v.is_literal() || !is_instance_of(view, v, class) {
                out.insert(result(shape, pc, focus, sh::class_component(), Some(v.clone()), format!("Value does not have class {class}")));
            }
        }
        if let Some(kind) = &pc.node_kind {
            if !kind.accepts(v) {
                out.insert(result(shape, pc, focus, sh::node_kind_component(), Some(v.clone()), format!("Value does not have node kind {}", kind.iri())));
            }
        }
    }
}

fn check_sparql(
    view: &dyn TripleSource,
    shape: &Shape,
    sc: &SparqlConstraint,
    focus: &Term,
    out: &mut BTreeSet<ValidationResult>,
) -> Result<(), ShaclError> {
    let this = Var::new("this");
    let mut initial = Binding::new();
    initial.insert(this.clone(), focus.clone());
    let options = EvalOptions {
        default_empty_groups: true,
    };
    let answer = sparql::evaluate_with(&sc.select, view, &initial, &options).map_err(|source| ShaclError::Query {
        shape: match &shape.id {
            Term::Iri(i) => i.to_string(),
            other => other.to_string(),
        },
        source,
    })?;
    let Some(solutions) = answer.solutions() else {
        return Ok(());
    };
    let message = sc
        .message
        .clone()
        .or_else(|| shape.message.clone())
        .unwrap_or_else(|| "SPARQL constraint violated".to_owned());
    for row in &solutions.rows {
        out.insert(ValidationResult {
            focus_node: row.get(&this).cloned().unwrap_or_else(|| focus.clone()),
            result_path: row.get(&Var::new("path")).and_then(|t| t.as_iri().cloned()),
            value: row.get(&Var::new("value")).cloned(),
            source_constraint_component: sh::sparql_component(),
            result_severity: shape.severity.clone(),
            result_message: message.clone(),
            source_shape: shape.id.clone(),
        });
    }
    Ok(())
}
