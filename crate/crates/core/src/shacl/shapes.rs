use std::collections::{BTreeMap, BTreeSet};

use super::ShaclError;
use crate::sparql::{self, Query};
use crate::store::{DataView, Snapshot, TripleSource};
use crate::term::{Iri, Term};
use crate::vocab::{rdf, rdfs, sh};

/// `sh:nodeKind` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    Iri,
    BlankNode,
    Literal,
    BlankNodeOrIri,
    BlankNodeOrLiteral,
    IriOrLiteral,
}

impl NodeKind {
    fn from_iri(iri: &str) -> Option<Self> {
        Some(match iri {
            sh::IRI => NodeKind::Iri,
            sh::BLANK_NODE => NodeKind::BlankNode,
            sh::LITERAL => NodeKind::Literal,
            sh::BLANK_NODE_OR_IRI => NodeKind::BlankNodeOrIri,
            sh::BLANK_NODE_OR_LITERAL => NodeKind::BlankNodeOrLiteral,
            sh::IRI_OR_LITERAL => NodeKind::IriOrLiteral,
            _ => return None,
        })
    }

    pub fn iri(&self) -> Iri {
        match self {
            NodeKind::Iri => sh::iri(),
            NodeKind::BlankNode => sh::blank_node(),
            NodeKind::Literal => sh::literal(),
            NodeKind::BlankNodeOrIri => sh::blank_node_or_iri(),
            NodeKind::BlankNodeOrLiteral => sh::blank_node_or_literal(),
            NodeKind::IriOrLiteral => sh::iri_or_literal(),
        }
    }

    pub fn accepts(&self, t: &Term) -> bool {
        match self {
            NodeKind::Iri => t.is_iri(),
            NodeKind::BlankNode => t.is_blank(),
            NodeKind::Literal => t.is_literal(),
            NodeKind::BlankNodeOrIri => !t.is_literal(),
            NodeKind::BlankNodeOrLiteral => !t.is_iri(),
            NodeKind::IriOrLiteral => !t.is_blank(),
        }
    }
}

/// A property shape over a single-predicate path.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyConstraint {
    pub id: Term,
    pub path: Iri,
    pub max_count: Option<u64>,
    pub min_count: Option<u64>,
    pub datatype: Option<Iri>,
    pub class: Option<Iri>,
    pub node_kind: Option<NodeKind>,
    pub message: Option<String>,
    pub severity: Iri,
    /// The shape's own statements with non-blank objects, for report output.
    pub description: Vec<(Iri, Term)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparqlConstraint {
    pub id: Term,
    pub select: Query,
    pub select_text: String,
    pub message: Option<String>,
    pub prefixes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub id: Term,
    pub target_classes: Vec<Iri>,
    pub properties: Vec<PropertyConstraint>,
    pub sparql: Vec<SparqlConstraint>,
    pub message: Option<String>,
    pub severity: Iri,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShapeSet {
    pub shapes: Vec<Shape>,
}

impl ShapeSet {
    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn get(&self, id: &Term) -> Option<&Shape> {
        self.shapes.iter().find(|s| &s.id == id)
    }
}

const NODE_SHAPE_KEYS: &[&str] = &[
    sh::TARGET_CLASS,
    sh::PROPERTY,
    sh::SPARQL,
    sh::MESSAGE,
    sh::SEVERITY,
    sh::NAME,
    sh::DESCRIPTION,
    sh::DEACTIVATED,
];

const PROPERTY_SHAPE_KEYS: &[&str] = &[
    sh::PATH,
    sh::MAX_COUNT,
    sh::MIN_COUNT,
    sh::DATATYPE,
    sh::CLASS,
    sh::NODE_KIND,
    sh::MESSAGE,
    sh::SEVERITY,
    sh::NAME,
    sh::DESCRIPTION,
    sh::DEACTIVATED,
];

const SPARQL_KEYS: &[&str] = &[sh::SELECT, sh::MESSAGE, sh::PREFIXES, sh::DEACTIVATED];

/// Extracts all node shapes from `shapes_graph` of the snapshot.
pub fn load_shapes(snapshot: &Snapshot, shapes_graph: &Iri) -> Result<ShapeSet, ShaclError> {
    let view = DataView::only(snapshot, [shapes_graph.clone()]);
    load_shapes_from(&view)
}

/// Extracts all node shapes from an arbitrary triple source.
pub fn load_shapes_from(view: &dyn TripleSource) -> Result<ShapeSet, ShaclError> {
    let mut ids: BTreeSet<Term> = view
        .subjects(&rdf::type_().into(), &sh::node_shape().into())
        .into_iter()
        .collect();
    view.for_each_triple(None, Some(&sh::target_class().into()), None, &mut |s, _, _| {
        ids.insert(s.clone());
    });
    let mut shapes = Vec::new();
    for id in ids {
        if is_deactivated(view, &id) {
            continue;
        }
        shapes.push(load_node_shape(view, &id)?);
    }
    Ok(ShapeSet { shapes })
}

fn shape_name(id: &Term) -> String {
    match id {
        Term::Iri(i) => i.to_string(),
        other => format!("{other}"),
    }
}

fn check_keys(view: &dyn TripleSource, id: &Term, allowed: &[&str]) -> Result<(), ShaclError> {
    for t in view.triples(Some(id), None, None) {
        let p = t.predicate.as_iri().expect("predicates are IRIs").as_str();
        if p.starts_with(sh::NS) && !allowed.contains(&p) {
            return Err(ShaclError::UnsupportedComponent {
                component: p.to_owned(),
                shape: shape_name(id),
            });
        }
    }
    Ok(())
}

fn is_deactivated(view: &dyn TripleSource, id: &Term) -> bool {
    view.objects(id, &sh::deactivated().into())
        .iter()
        .any(|t| t.as_literal().and_then(|l| l.as_bool()) == Some(true))
}

fn single<'v>(values: &'v [Term], id: &Term, what: &str) -> Result<Option<&'v Term>, ShaclError> {
    match values {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        _ => Err(ShaclError::InvalidShape {
            shape: shape_name(id),
            message: format!("multiple values for {what}"),
        }),
    }
}

fn iri_value(view: &dyn TripleSource, id: &Term, pred: Iri, what: &str) -> Result<Option<Iri>, ShaclError> {
    let values = view.objects(id, &pred.into());
    match single(&values, id, what)? {
        None => Ok(None),
        Some(Term::Iri(i)) => Ok(Some(i.clone())),
        Some(other) => Err(ShaclError::InvalidShape {
            shape: shape_name(id),
            message: format!("{what} must be an IRI, got {other}"),
        }),
    }
}

fn count_value(view: &dyn TripleSource, id: &Term, pred: Iri, what: &str) -> Result<Option<u64>, ShaclError> {
    let values = view.objects(id, &pred.into());
    match single(&values, id, what)? {
        None => Ok(None),
        Some(t) => t
            .as_literal()
            .and_then(|l| l.as_i64())
            .filter(|n| *n >= 0)
            .map(|n| Some(n as u64))
            .ok_or_else(|| ShaclError::InvalidShape {
                shape: shape_name(id),
                message: format!("{what} must be a non-negative integer, got {t}"),
            }),
    }
}

fn message(view: &dyn TripleSource, id: &Term) -> Option<String> {
    let mut msgs: Vec<(bool, String)> = view
        .objects(id, &sh::message().into())
        .into_iter()
        .filter_map(|t| t.as_literal().map(|l| (l.language().is_some(), l.lexical().to_owned())))
        .collect();
    msgs.sort();
    msgs.into_iter().next().map(|(_, m)| m)
}

fn severity(view: &dyn TripleSource, id: &Term, default: Iri) -> Result<Iri, ShaclError> {
    Ok(iri_value(view, id, sh::severity(), "sh:severity")?.unwrap_or(default))
}

fn load_node_shape(view: &dyn TripleSource, id: &Term) -> Result<Shape, ShaclError> {
    check_keys(view, id, NODE_SHAPE_KEYS)?;
    let mut target_classes = Vec::new();
    for t in view.objects(id, &sh::target_class().into()) {
        match t {
            Term::Iri(i) => target_classes.push(i),
            other => {
                return Err(ShaclError::InvalidShape {
                    shape: shape_name(id),
                    message: format!("sh:targetClass must be an IRI, got {other}"),
                })
            }
        }
    }
    target_classes.sort();
    let severity = severity(view, id, sh::violation())?;
    let mut properties = Vec::new();
    let mut prop_ids = view.objects(id, &sh::property().into());
    prop_ids.sort();
    for pid in prop_ids {
        if is_deactivated(view, &pid) {
            continue;
        }
        properties.push(load_property_shape(view, &pid)?);
    }
    let mut sparql = Vec::new();
    let mut sparql_ids = view.objects(id, &sh::sparql().into());
    sparql_ids.sort();
    for sid in sparql_ids {
        if is_deactivated(view, &sid) {
            continue;
        }
        sparql.push(load_sparql_constraint(view, id, &sid)?);
    }
    Ok(Shape {
        id: id.clone(),
        target_classes,
        properties,
        sparql,
        message: message(view, id),
        severity,
    })
}

fn load_property_shape(view: &dyn TripleSource, id: &Term) -> Result<PropertyConstraint, ShaclError> {
    check_keys(view, id, PROPERTY_SHAPE_KEYS)?;
    let paths = view.objects(id, &sh::path().into());
    let path = match single(&paths, id, "sh:path")? {
        Some(Term::Iri(i)) => i.clone(),
        Some(_) => {
            return Err(ShaclError::UnsupportedComponent {
                component: format!("{} (non-predicate path)", sh::PATH),
                shape: shape_name(id),
            })
        }
        None => {
            return Err(ShaclError::InvalidShape {
                shape: shape_name(id),
                message: "property shape without sh:path".into(),
            })
        }
    };
    let node_kind = match iri_value(view, id, sh::node_kind(), "sh:nodeKind")? {
        None => None,
        Some(i) => Some(NodeKind::from_iri(i.as_str()).ok_or_else(|| ShaclError::InvalidShape {
            shape: shape_name(id),
            message: format!("unknown node kind {i}"),
        })?),
    };
    let mut description: Vec<(Iri, Term)> = view
        .triples(Some(id), None, None)
        .into_iter()
        .filter(|t| !t.object.is_blank())
        .filter_map(|t| t.predicate.as_iri().cloned().map(|p| (p, t.object)))
        .collect();
    description.sort_by(|a, b| description_rank(&a.0).cmp(&description_rank(&b.0)).then(a.cmp(b)));
    Ok(PropertyConstraint {
        id: id.clone(),
        path,
        max_count: count_value(view, id, sh::max_count(), "sh:maxCount")?,
        min_count: count_value(view, id, sh::min_count(), "sh:minCount")?,
        datatype: iri_value(view, id, sh::datatype(), "sh:datatype")?,
        class: iri_value(view, id, sh::class(), "sh:class")?,
        node_kind,
        message: message(view, id),
        severity: severity(view, id, sh::violation())?,
        description,
    })
}

/// Orders shape description predicates the way reports conventionally list them.
fn description_rank(p: &Iri) -> usize {
    const ORDER: &[&str] = &[
        rdf::TYPE,
        sh::PATH,
        sh::MIN_COUNT,
        sh::MAX_COUNT,
        sh::DATATYPE,
        sh::CLASS,
        sh::NODE_KIND,
        sh::SEVERITY,
        sh::MESSAGE,
    ];
    ORDER.iter().position(|x| *x == p.as_str()).unwrap_or(ORDER.len())
}

fn load_sparql_constraint(view: &dyn TripleSource, shape: &Term, id: &Term) -> Result<SparqlConstraint, ShaclError> {
    check_keys(view, id, SPARQL_KEYS)?;
    let selects = view.objects(id, &sh::select().into());
    let select_text = match single(&selects, shape, "sh:select")? {
        Some(Term::Literal(l)) => l.lexical().to_owned(),
        _ => {
            return Err(ShaclError::InvalidShape {
                shape: shape_name(shape),
                message: "SPARQL constraint needs exactly one sh:select string".into(),
            })
        }
    };
    let mut prefixes = BTreeMap::new();
    for p in view.objects(id, &sh::prefixes().into()) {
        for decl in view.objects(&p, &sh::declare().into()) {
            let prefix = view.objects(&decl, &sh::prefix().into());
            let ns = view.objects(&decl, &sh::namespace().into());
            match (prefix.as_slice(), ns.as_slice()) {
                ([Term::Literal(pfx)], [Term::Literal(ns)]) => {
                    prefixes.insert(pfx.lexical().to_owned(), ns.lexical().to_owned());
                }
                _ => {
                    return Err(ShaclError::InvalidShape {
                        shape: shape_name(shape),
                        message: "sh:declare needs one sh:prefix and one sh:namespace literal".into(),
                    })
                }
            }
        }
    }
    let select = sparql::parse_query_with(&select_text, &prefixes).map_err(|source| ShaclError::Query {
        shape: shape_name(shape),
        source,
    })?;
    match &select.form {
        sparql::QueryForm::Select(q) if q.output_vars().iter().any(|v| v.name() == "this") => {}
        _ => {
            return Err(ShaclError::InvalidShape {
                shape: shape_name(shape),
                message: "sh:select must be a SELECT query projecting $this".into(),
            })
        }
    }
    Ok(SparqlConstraint {
        id: id.clone(),
        select,
        select_text,
        message: message(view, id),
        prefixes,
    })
}

/// All classes that are `class` or reach it through `rdfs:subClassOf`.
pub(crate) fn subclass_closure(view: &dyn TripleSource, class: &Iri) -> BTreeSet<Term> {
    let sub = Term::Iri(rdfs::sub_class_of());
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    let mut stack = vec![Term::Iri(class.clone())];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            stack.extend(view.subjects(&sub, &c));
        }
    }
    seen
}
