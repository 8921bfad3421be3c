use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::schema::{ClassSchema, PropertyKind, PropertySchema};
use super::{BoundaryError, OgmError};
use crate::term::{Iri, Literal, Term};

/// An unexpanded link to another instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ObjectRef {
    pub iri: Iri,
}

/// One value of a property.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Literal(Literal),
    Ref(ObjectRef),
    Object(Box<GraphObject>),
}

impl Value {
    pub fn reference(iri: Iri) -> Self {
        Value::Ref(ObjectRef { iri })
    }

    /// IRI of the linked instance, for references and materialized objects.
    pub fn iri(&self) -> Option<&Iri> {
        match self {
            Value::Literal(_) => None,
            Value::Ref(r) => Some(&r.iri),
            Value::Object(o) => Some(&o.iri),
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Value::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_object(&self) -> Option<&GraphObject> {
        match self {
            Value::Object(o) => Some(o),
            _ => None,
        }
    }

    pub(crate) fn to_term(&self) -> Term {
        match self {
            Value::Literal(l) => Term::Literal(l.clone()),
            Value::Ref(r) => Term::Iri(r.iri.clone()),
            Value::Object(o) => Term::Iri(o.iri.clone()),
        }
    }
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        Value::Literal(l)
    }
}

impl From<Iri> for Value {
    fn from(iri: Iri) -> Self {
        Value::reference(iri)
    }
}

/// A schema-validated, scope-bounded view of one instance with change tracking.
#[derive(Debug, Clone)]
pub struct GraphObject {
    pub(crate) iri: Iri,
    pub(crate) schema: Arc<ClassSchema>,
    pub(crate) values: BTreeMap<Iri, Vec<Value>>,
    /// Properties whose full value list is known (materialized or assigned).
    pub(crate) loaded: BTreeSet<Iri>,
    pub(crate) dirty: BTreeSet<Iri>,
    pub(crate) is_new: bool,
}

impl PartialEq for GraphObject {
    fn eq(&self, other: &Self) -> bool {
        self.iri == other.iri
            && self.schema.class == other.schema.class
            && self.values == other.values
            && self.dirty == other.dirty
            && self.is_new == other.is_new
    }
}

impl GraphObject {
    pub(crate) fn new(iri: Iri, schema: Arc<ClassSchema>, is_new: bool) -> Self {
        let loaded = if is_new {
            schema.properties.keys().cloned().collect()
        } else {
            BTreeSet::new()
        };
        Self {
            iri,
            schema,
            values: BTreeMap::new(),
            loaded,
            dirty: BTreeSet::new(),
            is_new,
        }
    }

    pub fn iri(&self) -> &Iri {
        &self.iri
    }

    pub fn class(&self) -> &Iri {
        &self.schema.class
    }

    pub fn schema(&self) -> &ClassSchema {
        &self.schema
    }

    pub fn is_new(&self) -> bool {
        self.is_new
    }

    pub fn is_dirty(&self) -> bool {
        self.is_new || !self.dirty.is_empty()
    }

    pub fn dirty_properties(&self) -> impl Iterator<Item = &Iri> {
        self.dirty.iter()
    }

    pub fn properties(&self) -> impl Iterator<Item = (&Iri, &[Value])> {
        self.values.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn get(&self, property: &Iri) -> &[Value] {
        self.values.get(property).map_or(&[], Vec::as_slice)
    }

    /// The single literal of a property, if exactly one is present.
    pub fn literal(&self, property: &Iri) -> Option<&Literal> {
        match self.get(property) {
            [Value::Literal(l)] => Some(l),
            _ => None,
        }
    }

    pub fn f64(&self, property: &Iri) -> Option<f64> {
        self.literal(property).and_then(Literal::as_f64)
    }

    /// IRIs linked through an object property.
    pub fn links(&self, property: &Iri) -> Vec<&Iri> {
        self.get(property).iter().filter_map(Value::iri).collect()
    }

    pub fn link(&self, property: &Iri) -> Option<&Iri> {
        match self.links(property).as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }

    /// Mutable access to a value slot, used to expand references in place.
    pub fn value_mut(&mut self, property: &Iri, index: usize) -> Option<&mut Value> {
        self.values.get_mut(property).and_then(|v| v.get_mut(index))
    }

    fn property_schema(&self, property: &Iri) -> Result<&PropertySchema, OgmError> {
        self.schema.property(property).ok_or_else(|| {
            OgmError::Boundary(BoundaryError::UnknownProperty {
                class: self.schema.class.clone(),
                property: property.clone(),
            })
        })
    }

    fn check_value(&self, ps: &PropertySchema, value: &Value) -> Result<(), OgmError> {
        match (ps.kind, value) {
            (PropertyKind::Data, Value::Literal(l)) => {
                if let Some(dt) = &ps.datatype {
                    if l.datatype() != dt || !l.is_well_formed() {
                        return Err(OgmError::Boundary(BoundaryError::Datatype {
                            property: ps.iri.clone(),
                            expected: dt.clone(),
                            found: l.datatype().clone(),
                            lexical: l.lexical().to_owned(),
                        }));
                    }
                }
                Ok(())
            }
            (PropertyKind::Data, _) => Err(OgmError::Boundary(BoundaryError::NotALiteral {
                property: ps.iri.clone(),
            })),
            (PropertyKind::Object, Value::Literal(_)) => Err(OgmError::Boundary(BoundaryError::NotAnObject {
                property: ps.iri.clone(),
            })),
            (PropertyKind::Object, _) => Ok(()),
        }
    }

    /// Replaces the value list of a property after boundary validation.
    pub fn set(&mut self, property: &Iri, values: Vec<Value>) -> Result<(), OgmError> {
        let ps = self.property_schema(property)?;
        if let Some(max) = ps.max_cardinality {
            if values.len() as u64 > max {
                return Err(OgmError::Boundary(BoundaryError::MaxCardinality {
                    property: property.clone(),
                    max,
                    attempted: values.len() as u64,
                }));
            }
        }
        for v in &values {
            self.check_value(ps, v)?;
        }
        let mut deduped: Vec<Value> = Vec::with_capacity(values.len());
        for v in values {
            if !deduped.iter().any(|d| d.to_term() == v.to_term()) {
                deduped.push(v);
            }
        }
        if deduped.is_empty() {
            self.values.remove(property);
        } else {
            self.values.insert(property.clone(), deduped);
        }
        self.loaded.insert(property.clone());
        self.dirty.insert(property.clone());
        Ok(())
    }

    pub fn set_one(&mut self, property: &Iri, value: impl Into<Value>) -> Result<(), OgmError> {
        self.set(property, vec![value.into()])
    }

    /// Appends a value, keeping the current list. The property's current
    /// values must be known (loaded by fetch or assigned earlier).
    pub fn add(&mut self, property: &Iri, value: impl Into<Value>) -> Result<(), OgmError> {
        self.property_schema(property)?;
        self.require_loaded(property)?;
        let mut values = self.get(property).to_vec();
        values.push(value.into());
        self.set(property, values)
    }

    /// Retracts one value of a property.
    pub fn remove(&mut self, property: &Iri, value: &Term) -> Result<(), OgmError> {
        self.property_schema(property)?;
        self.require_loaded(property)?;
        let values: Vec<Value> = self.get(property).iter().filter(|v| &v.to_term() != value).cloned().collect();
        self.set(property, values)
    }

    /// Retracts every value of a property.
    pub fn clear(&mut self, property: &Iri) -> Result<(), OgmError> {
        self.set(property, Vec::new())
    }

    fn require_loaded(&self, property: &Iri) -> Result<(), OgmError> {
        if self.loaded.contains(property) {
            Ok(())
        } else {
            Err(OgmError::Boundary(BoundaryError::NotLoaded {
                property: property.clone(),
            }))
        }
    }

    pub(crate) fn check_min_cardinalities(&self) -> Result<(), OgmError> {
        for (p, ps) in &self.schema.properties {
            let Some(min) = ps.min_cardinality else {
                continue;
            };
            if !self.is_new && !self.loaded.contains(p) {
                continue;
            }
            let actual = self.get(p).len() as u64;
            if actual < min {
                return Err(OgmError::Boundary(BoundaryError::MinCardinality {
                    iri: self.iri.clone(),
                    property: p.clone(),
                    min,
                    actual,
                }));
            }
        }
        Ok(())
    }

    pub(crate) fn mark_clean(&mut self) {
        self.dirty.clear();
        self.is_new = false;
    }
}
