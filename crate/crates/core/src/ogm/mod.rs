//! Object-graph mapper: schemas derived from the live ontology, scoped
//! materialization of instances, and commit as the validated write path.

mod object;
mod schema;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, TimeZone, Utc};
use thiserror::Error;

pub use object::{GraphObject, ObjectRef, Value};
pub use schema::{derive_schema, ClassSchema, PropertyKind, PropertySchema};

use crate::shacl::ValidationReport;
use crate::store::{DataView, Snapshot, Store, StoreError, TransactionDelta, TripleSource, TxnId};
use crate::term::{Iri, Literal, Quad, Term};
use crate::vocab::{cfc, prov, rdf, rdfs, DEFAULT_GRAPH, ONTOLOGY_GRAPH, SHAPES_GRAPH};

/// Single-entity violations caught before any delta is built.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundaryError {
    #[error("property {property} is not admissible on {class}")]
    UnknownProperty { class: Iri, property: Iri },
    #[error("property {property} allows at most {max} value(s), got {attempted}")]
    MaxCardinality { property: Iri, max: u64, attempted: u64 },
    #[error("{iri} needs at least {min} value(s) of {property}, has {actual}")]
    MinCardinality { iri: Iri, property: Iri, min: u64, actual: u64 },
    #[error("property {property} expects {expected}, got \"{lexical}\" of type {found}")]
    Datatype { property: Iri, expected: Iri, found: Iri, lexical: String },
    #[error("data property {property} needs a literal value")]
    NotALiteral { property: Iri },
    #[error("object property {property} needs a resource value")]
    NotAnObject { property: Iri },
    #[error("values of {property} were not loaded; fetch it or assign the full list")]
    NotLoaded { property: Iri },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OgmError {
    #[error("unknown class {0}")]
    UnknownClass(Iri),
    #[error("unknown instance {0}")]
    UnknownInstance(Iri),
    #[error("{iri} is not an instance of {class}")]
    NotInstanceOf { iri: Iri, class: Iri },
    #[error("{0} already exists")]
    InstanceExists(Iri),
    #[error("graph data of {iri} violates the ontology at {property}: {message}")]
    SchemaViolation { iri: Iri, property: Iri, message: String },
    #[error("boundary violation: {0}")]
    Boundary(#[from] BoundaryError),
    #[error("commit rejected by the admission gate: {} violation(s)", .0.results.len())]
    Rejected(Box<ValidationReport>),
    #[error(transparent)]
    Store(StoreError),
}

impl OgmError {
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            OgmError::Rejected(r) => Some(r),
            _ => None,
        }
    }
}

impl From<StoreError> for OgmError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Rejected(r) => OgmError::Rejected(r),
            other => OgmError::Store(other),
        }
    }
}

/// Source of commit timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: each reading advances by one second from a fixed epoch.
#[derive(Debug)]
pub struct LogicalClock {
    epoch: DateTime<Utc>,
    ticks: AtomicI64,
}

impl LogicalClock {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        Self {
            epoch,
            ticks: AtomicI64::new(0),
        }
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new(Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap())
    }
}

impl Clock for LogicalClock {
    fn now(&self) -> DateTime<Utc> {
        let n = self.ticks.fetch_add(1, Ordering::SeqCst) + 1;
        self.epoch + chrono::Duration::seconds(n)
    }
}

/// What `fetch` materializes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeSpec {
    /// 0 keeps object-property values as references.
    pub depth: u32,
    /// When set, only these properties are loaded.
    pub include_properties: Option<BTreeSet<Iri>>,
    pub follow_object_properties: bool,
}

impl Default for ScopeSpec {
    fn default() -> Self {
        Self::shallow()
    }
}

impl ScopeSpec {
    pub fn shallow() -> Self {
        Self {
            depth: 0,
            include_properties: None,
            follow_object_properties: true,
        }
    }

    pub fn depth(depth: u32) -> Self {
        Self {
            depth,
            include_properties: None,
            follow_object_properties: true,
        }
    }

    pub fn only(mut self, properties: impl IntoIterator<Item = Iri>) -> Self {
        self.include_properties = Some(properties.into_iter().collect());
        self
    }
}

/// Predicates that are bookkeeping rather than schema properties.
fn is_bookkeeping(p: &Iri) -> bool {
    matches!(
        p.as_str(),
        rdf::TYPE | rdfs::LABEL | rdfs::COMMENT | prov::WAS_GENERATED_BY
    )
}

/// A service's handle on the store. Each service owns one, carrying its actor IRI.
pub struct Ogm {
    store: Arc<Store>,
    actor: Iri,
    clock: Arc<dyn Clock>,
    data_graph: Iri,
    ontology_graph: Iri,
    schemas: Mutex<HashMap<Iri, (TxnId, Arc<ClassSchema>)>>,
}

impl Ogm {
    pub fn new(store: Arc<Store>, actor: Iri) -> Self {
        Self::with_clock(store, actor, Arc::new(SystemClock))
    }

    pub fn with_clock(store: Arc<Store>, actor: Iri, clock: Arc<dyn Clock>) -> Self {
        Self {
            store,
            actor,
            clock,
            data_graph: Iri::from_static(DEFAULT_GRAPH),
            ontology_graph: Iri::from_static(ONTOLOGY_GRAPH),
            schemas: Mutex::new(HashMap::new()),
        }
    }

    pub fn actor(&self) -> &Iri {
        &self.actor
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn snapshot(&self) -> Snapshot {
        self.store.snapshot()
    }

    /// Instance data as seen by services: every graph except the shapes graph.
    pub fn data_view<'a>(&self, snapshot: &'a Snapshot) -> DataView<'a> {
        DataView::excluding(snapshot, [Iri::from_static(SHAPES_GRAPH)])
    }

    /// Schema of `class` as of `view`, cached per ontology-graph version.
    pub fn schema(&self, class: &Iri, view: &Snapshot) -> Result<Arc<ClassSchema>, OgmError> {
        let version = view.graph_version(&self.ontology_graph);
        if let Some((v, s)) = self.schemas.lock().expect("schema cache").get(class) {
            if *v == version {
                return Ok(s.clone());
            }
        }
        let ontology = DataView::only(view, [self.ontology_graph.clone()]);
        let schema = Arc::new(derive_schema(&ontology, class)?);
        self.schemas
            .lock()
            .expect("schema cache")
            .insert(class.clone(), (version, schema.clone()));
        Ok(schema)
    }

    pub fn is_instance_of(&self, iri: &Iri, class: &Iri, view: &Snapshot) -> bool {
        crate::shacl::is_instance_of(&self.data_view(view), &Term::Iri(iri.clone()), class)
    }

    /// All instances of `class` (including subclasses), sorted by IRI.
    pub fn instances_of(&self, class: &Iri, view: &Snapshot) -> Vec<Iri> {
        let dv = self.data_view(view);
        let mut out: BTreeSet<Iri> = BTreeSet::new();
        let ty = Term::Iri(rdf::type_());
        let sub = Term::Iri(rdfs::sub_class_of());
        let mut stack = vec![Term::Iri(class.clone())];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c.clone()) {
                continue;
            }
            stack.extend(dv.subjects(&sub, &c));
            out.extend(dv.subjects(&ty, &c).into_iter().filter_map(|t| t.as_iri().cloned()));
        }
        out.into_iter().collect()
    }

    pub fn fetch(&self, iri: &Iri, class: &Iri, scope: &ScopeSpec, view: &Snapshot) -> Result<GraphObject, OgmError> {
        let schema = self.schema(class, view)?;
        let dv = self.data_view(view);
        let subject = Term::Iri(iri.clone());
        if dv.triples(Some(&subject), None, None).is_empty() {
            return Err(OgmError::UnknownInstance(iri.clone()));
        }
        if !crate::shacl::is_instance_of(&dv, &subject, class) {
            return Err(OgmError::NotInstanceOf {
                iri: iri.clone(),
                class: class.clone(),
            });
        }
        let mut obj = GraphObject::new(iri.clone(), schema.clone(), false);
        let mut raw: BTreeMap<Iri, Vec<Term>> = BTreeMap::new();
        for t in dv.triples(Some(&subject), None, None) {
            let p = t.predicate.as_iri().expect("predicate IRI").clone();
            if is_bookkeeping(&p) {
                continue;
            }
            if schema.property(&p).is_none() {
                return Err(OgmError::SchemaViolation {
                    iri: iri.clone(),
                    property: p,
                    message: format!("not admissible on {class}"),
                });
            }
            raw.entry(p).or_default().push(t.object);
        }
        for (p, ps) in &schema.properties {
            if let Some(only) = &scope.include_properties {
                if !only.contains(p) {
                    continue;
                }
            }
            let mut terms = raw.remove(p).unwrap_or_default();
            terms.sort();
            if let Some(max) = ps.max_cardinality {
                if terms.len() as u64 > max {
                    return Err(OgmError::SchemaViolation {
                        iri: iri.clone(),
                        property: p.clone(),
                        message: format!("{} values exceed maximum cardinality {max}", terms.len()),
                    });
                }
            }
            let mut values = Vec::with_capacity(terms.len());
            for term in terms {
                values.push(self.materialize(iri, ps, term, scope, view)?);
            }
            if !values.is_empty() {
                obj.values.insert(p.clone(), values);
            }
            obj.loaded.insert(p.clone());
        }
        Ok(obj)
    }

    fn materialize(&self, owner: &Iri, ps: &PropertySchema, term: Term, scope: &ScopeSpec, view: &Snapshot) -> Result<Value, OgmError> {
        let violation = |message: String| OgmError::SchemaViolation {
            iri: owner.clone(),
            property: ps.iri.clone(),
            message,
        };
        match (ps.kind, term) {
            (PropertyKind::Data, Term::Literal(l)) => {
                if let Some(dt) = &ps.datatype {
                    if l.datatype() != dt || !l.is_well_formed() {
                        return Err(violation(format!("value {l:?} is not a valid {dt}")));
                    }
                }
                Ok(Value::Literal(l))
            }
            (PropertyKind::Data, other) => Err(violation(format!("expected a literal, found {other}"))),
            (PropertyKind::Object, Term::Iri(target)) => {
                if scope.depth == 0 || !scope.follow_object_properties {
                    return Ok(Value::reference(target));
                }
                let Some(class) = self.class_for_link(&target, ps, view) else {
                    return Ok(Value::reference(target));
                };
                let nested = ScopeSpec {
                    depth: scope.depth - 1,
                    include_properties: None,
                    follow_object_properties: scope.follow_object_properties,
                };
                Ok(Value::Object(Box::new(self.fetch(&target, &class, &nested, view)?)))
            }
            (PropertyKind::Object, other) => Err(violation(format!("expected a resource, found {other}"))),
        }
    }

    /// Class used to materialize a linked instance: the property's range when
    /// the target is an instance of it, else the target's first typed class.
    fn class_for_link(&self, target: &Iri, ps: &PropertySchema, view: &Snapshot) -> Option<Iri> {
        if let Some(range) = &ps.range_class {
            if self.is_instance_of(target, range, view) {
                return Some(range.clone());
            }
        }
        let dv = self.data_view(view);
        let mut types: Vec<Iri> = dv
            .objects(&Term::Iri(target.clone()), &Term::Iri(rdf::type_()))
            .into_iter()
            .filter_map(|t| t.as_iri().cloned())
            .collect();
        types.sort();
        types.into_iter().find(|t| self.schema(t, view).is_ok())
    }

    /// Materializes a reference; equivalent to fetching its IRI.
    pub fn expand(&self, reference: &ObjectRef, class: &Iri, scope: &ScopeSpec, view: &Snapshot) -> Result<GraphObject, OgmError> {
        self.fetch(&reference.iri, class, scope, view)
    }

    /// Starts a new instance; its type assertion is staged until commit.
    pub fn create(&self, class: &Iri, iri: &Iri) -> Result<GraphObject, OgmError> {
        let view = self.snapshot();
        let schema = self.schema(class, &view)?;
        let dv = self.data_view(&view);
        if !dv.objects(&Term::Iri(iri.clone()), &Term::Iri(rdf::type_())).is_empty() {
            return Err(OgmError::InstanceExists(iri.clone()));
        }
        Ok(GraphObject::new(iri.clone(), schema, true))
    }

    pub fn commit_one(&self, object: &mut GraphObject) -> Result<TxnId, OgmError> {
        self.commit(&mut [object])
    }

    /// Writes every dirty property of the given objects in one transaction.
    pub fn commit(&self, objects: &mut [&mut GraphObject]) -> Result<TxnId, OgmError> {
        if objects.iter().all(|o| !o.is_dirty()) {
            return Ok(self.store.head());
        }
        for o in objects.iter() {
            if o.is_dirty() {
                o.check_min_cardinalities()?;
            }
        }
        let graph = Term::Iri(self.data_graph.clone());
        let timestamp = self.clock.now();
        let actor = self.actor.clone();
        let plan: Vec<&GraphObject> = objects.iter().map(|o| &**o).filter(|o| o.is_dirty()).collect();
        let result = self.store.apply_with(|head| {
            let mut inserts: BTreeSet<Quad> = BTreeSet::new();
            let mut deletes: BTreeSet<Quad> = BTreeSet::new();
            let quad = |s: &Term, p: &Iri, o: Term| Quad {
                subject: s.clone(),
                predicate: Term::Iri(p.clone()),
                object: o,
                graph: graph.clone(),
            };
            for o in &plan {
                let subject = Term::Iri(o.iri.clone());
                if o.is_new {
                    inserts.insert(quad(&subject, &rdf::type_(), Term::Iri(o.schema.class.clone())));
                }
                for p in &o.dirty {
                    let ps = o.schema.property(p).expect("dirty properties are in the schema");
                    let pattern = crate::store::QuadPattern::any()
                        .subject(subject.clone())
                        .predicate(p.clone())
                        .graph(graph.clone());
                    for old in head.match_pattern(&pattern) {
                        if let (Some(inv), Term::Iri(_)) = (&ps.inverse, &old.object) {
                            deletes.insert(quad(&old.object, inv, subject.clone()));
                        }
                        deletes.insert(old);
                    }
                    for v in o.get(p) {
                        let t = v.to_term();
                        if let (Some(inv), Term::Iri(_)) = (&ps.inverse, &t) {
                            inserts.insert(quad(&t, inv, subject.clone()));
                        }
                        inserts.insert(quad(&subject, p, t));
                    }
                }
            }
            deletes.retain(|q| !inserts.contains(q));
            let changes_data = inserts.iter().any(|q| !head.contains(q)) || deletes.iter().any(|q| head.contains(q));
            let mut delta = TransactionDelta::new(actor.clone(), timestamp);
            if !changes_data {
                return delta;
            }
            let next = head.txn_id().0 + 1;
            for (i, o) in plan.iter().enumerate() {
                let activity = Term::Iri(Iri::new(format!("urn:kapps:activity:{next}-{}", i + 1)).expect("activity IRI"));
                inserts.insert(quad(&activity, &rdf::type_(), Term::Iri(prov::activity())));
                inserts.insert(quad(&activity, &prov::was_associated_with(), Term::Iri(actor.clone())));
                inserts.insert(quad(&activity, &prov::ended_at_time(), Term::Literal(Literal::date_time(timestamp))));
                if o.schema.is_subclass_of(&cfc::operation()) || o.schema.is_subclass_of(&cfc::observation()) {
                    inserts.insert(quad(&Term::Iri(o.iri.clone()), &prov::was_generated_by(), activity));
                }
            }
            delta.inserts = inserts;
            delta.deletes = deletes;
            delta
        });
        let txn = result?;
        for o in objects.iter_mut() {
            o.mark_clean();
        }
        Ok(txn)
    }
}
