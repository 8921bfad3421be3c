use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::OgmError;
use crate::store::TripleSource;
use crate::term::{Iri, Term};
use crate::vocab::{owl, rdf, rdfs, xsd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PropertyKind {
    Object,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertySchema {
    pub iri: Iri,
    pub kind: PropertyKind,
    pub range_class: Option<Iri>,
    pub datatype: Option<Iri>,
    pub max_cardinality: Option<u64>,
    pub min_cardinality: Option<u64>,
    /// Inverse property maintained automatically on commit.
    pub inverse: Option<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSchema {
    pub class: Iri,
    /// The class itself and every transitive `rdfs:subClassOf` ancestor.
    pub super_classes: BTreeSet<Iri>,
    pub properties: BTreeMap<Iri, PropertySchema>,
}

impl ClassSchema {
    pub fn property(&self, iri: &Iri) -> Option<&PropertySchema> {
        self.properties.get(iri)
    }

    pub fn is_subclass_of(&self, class: &Iri) -> bool {
        self.super_classes.contains(class)
    }
}

fn is_class(view: &dyn TripleSource, class: &Term) -> bool {
    let ty = Term::Iri(rdf::type_());
    view.has(class, &ty, &Term::Iri(owl::class()))
        || view.has(class, &ty, &Term::Iri(rdfs::class()))
        || !view.objects(class, &Term::Iri(rdfs::sub_class_of())).is_empty()
        || !view.subjects(&Term::Iri(rdfs::sub_class_of()), class).is_empty()
}

/// Ancestors with their distance (0 for the class itself), IRI classes only.
fn ancestors(view: &dyn TripleSource, class: &Iri) -> BTreeMap<Iri, usize> {
    let sub = Term::Iri(rdfs::sub_class_of());
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::from([(class.clone(), 0usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if dist.contains_key(&c) {
            continue;
        }
        dist.insert(c.clone(), d);
        for parent in view.objects(&Term::Iri(c), &sub) {
            if let Term::Iri(p) = parent {
                queue.push_back((p, d + 1));
            }
        }
    }
    dist
}

fn cardinality(view: &dyn TripleSource, node: &Term, pred: Iri) -> Option<u64> {
    view.objects(node, &Term::Iri(pred))
        .iter()
        .filter_map(|t| t.as_literal().and_then(|l| l.as_i64()))
        .filter(|n| *n >= 0)
        .map(|n| n as u64)
        .min()
}

fn is_datatype_iri(iri: &Iri) -> bool {
    iri.as_str().starts_with(xsd::NS) || iri.as_str() == rdfs::LITERAL || iri.as_str() == rdf::LANG_STRING
}

/// Derives the schema of `class` from ontology statements in `view`.
pub fn derive_schema(view: &dyn TripleSource, class: &Iri) -> Result<ClassSchema, OgmError> {
    let class_term = Term::Iri(class.clone());
    if !is_class(view, &class_term) {
        return Err(OgmError::UnknownClass(class.clone()));
    }
    let ancestry = ancestors(view, class);
    let ty = Term::Iri(rdf::type_());
    let domain = Term::Iri(rdfs::domain());
    let range = Term::Iri(rdfs::range());
    let inverse_of = Term::Iri(owl::inverse_of());

    let mut candidates: BTreeSet<Iri> = BTreeSet::new();
    for anc in ancestry.keys() {
        for p in view.subjects(&domain, &Term::Iri(anc.clone())) {
            if let Term::Iri(p) = p {
                candidates.insert(p);
            }
        }
    }

    let mut properties = BTreeMap::new();
    for p in candidates {
        let pt = Term::Iri(p.clone());
        let types = view.objects(&pt, &ty);
        let ranges: Vec<Iri> = view
            .objects(&pt, &range)
            .into_iter()
            .filter_map(|t| t.as_iri().cloned())
            .collect();
        let declared_object = types.contains(&Term::Iri(owl::object_property()));
        let declared_data = types.contains(&Term::Iri(owl::datatype_property()));
        let kind = if declared_object {
            PropertyKind::Object
        } else if declared_data || ranges.iter().any(is_datatype_iri) {
            PropertyKind::Data
        } else {
            PropertyKind::Object
        };
        let (range_class, datatype) = match kind {
            PropertyKind::Object => (ranges.iter().find(|r| !is_datatype_iri(r)).cloned(), None),
            PropertyKind::Data => (
                None,
                ranges
                    .iter()
                    .find(|r| r.as_str().starts_with(xsd::NS) || r.as_str() == rdf::LANG_STRING)
                    .cloned(),
            ),
        };
        let functional = types.contains(&Term::Iri(owl::functional_property()));
        let inverse = view
            .objects(&pt, &inverse_of)
            .into_iter()
            .chain(view.subjects(&inverse_of, &pt))
            .find_map(|t| t.as_iri().cloned());
        properties.insert(
            p.clone(),
            PropertySchema {
                iri: p,
                kind,
                range_class,
                datatype,
                max_cardinality: functional.then_some(1),
                min_cardinality: None,
                inverse,
            },
        );
    }

    // Restrictions: apply farthest ancestors first so nearer ones override.
    let mut by_distance: Vec<(&Iri, &usize)> = ancestry.iter().collect();
    by_distance.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let sub = Term::Iri(rdfs::sub_class_of());
    let restriction = Term::Iri(owl::restriction());
    for (anc, _) in by_distance {
        for r in view.objects(&Term::Iri(anc.clone()), &sub) {
            if !view.has(&r, &ty, &restriction) {
                continue;
            }
            let Some(Term::Iri(on)) = view.objects(&r, &Term::Iri(owl::on_property())).into_iter().next() else {
                continue;
            };
            let Some(ps) = properties.get_mut(&on) else {
                continue;
            };
            let exact = cardinality(view, &r, owl::cardinality()).or(cardinality(view, &r, owl::qualified_cardinality()));
            let max = cardinality(view, &r, owl::max_cardinality())
                .or(cardinality(view, &r, owl::max_qualified_cardinality()))
                .or(exact);
            let min = cardinality(view, &r, owl::min_cardinality())
                .or(cardinality(view, &r, owl::min_qualified_cardinality()))
                .or(exact);
            if max.is_some() {
                ps.max_cardinality = max;
            }
            if min.is_some() {
                ps.min_cardinality = min;
            }
        }
    }

    Ok(ClassSchema {
        class: class.clone(),
        super_classes: ancestry.into_keys().collect(),
        properties,
    })
}
