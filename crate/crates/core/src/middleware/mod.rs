//! Service middleware: registration of services and their workflows in the
//! graph, discovery by query, invocation over a transport, and connectors.

mod connector;
mod transport;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use connector::{Connector, ConnectorError, LoopbackConnector, Message, ReplayConnector};
pub use transport::{
    Fault, InvocationRequest, InvocationResponse, LocalTransport, RequestHandler, TcpTransport, Transport,
    TransportError, LOCAL_SCHEME, TCP_SCHEME,
};

use crate::ogm::{GraphObject, Ogm, OgmError, ScopeSpec, Value};
use crate::sparql::{self, Binding, Var};
use crate::store::{Snapshot, TripleSource, TxnId};
use crate::term::{Iri, Literal, Term};
use crate::vocab::{rdf, rdfs, svc};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub datatype: Iri,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, datatype: Iri) -> Self {
        Self {
            name: name.into(),
            datatype,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowDescriptor {
    pub iri: Iri,
    pub class: Iri,
    pub parameters: Vec<ParameterSpec>,
    pub outcome: Option<ParameterSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDescriptor {
    pub iri: Iri,
    pub class: Iri,
    pub provided_by: Option<Iri>,
    /// Set while the service is online.
    pub address: Option<String>,
    pub workflows: Vec<WorkflowDescriptor>,
}

/// Typed arguments handed to a workflow handler.
pub type Arguments = BTreeMap<String, Literal>;

/// Workflow implementation. Handlers write to the graph through their own
/// mapper commits; invocation itself never does.
pub type Handler = Arc<dyn Fn(&Arguments) -> Result<String, Fault> + Send + Sync>;

#[derive(Debug, Error)]
pub enum MiddlewareError {
    #[error(transparent)]
    Ogm(#[from] OgmError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("unknown service {0}")]
    UnknownService(Iri),
    #[error("no handler supplied for workflow {0}")]
    MissingHandler(Iri),
}

impl MiddlewareError {
    pub fn report(&self) -> Option<&crate::shacl::ValidationReport> {
        match self {
            MiddlewareError::Ogm(e) => e.report(),
            _ => None,
        }
    }
}

/// Checks named lexical arguments against a workflow's parameter list.
pub fn check_arguments(workflow: &WorkflowDescriptor, args: &BTreeMap<String, String>) -> Result<Arguments, Fault> {
    let mismatch = |detail: String| Fault::ArgumentMismatch { detail };
    let declared: BTreeSet<&str> = workflow.parameters.iter().map(|p| p.name.as_str()).collect();
    if let Some(extra) = args.keys().find(|k| !declared.contains(k.as_str())) {
        return Err(mismatch(format!("unexpected argument `{extra}` for {}", workflow.iri)));
    }
    let mut out = Arguments::new();
    for p in &workflow.parameters {
        let lexical = args
            .get(&p.name)
            .ok_or_else(|| mismatch(format!("missing argument `{}` for {}", p.name, workflow.iri)))?;
        let lit = Literal::typed(lexical, p.datatype.clone());
        if !lit.is_well_formed() {
            return Err(mismatch(format!("argument `{}` = {lexical:?} is not a valid {}", p.name, p.datatype)));
        }
        out.insert(p.name.clone(), lit);
    }
    Ok(out)
}

#[derive(Clone)]
struct Bound {
    descriptor: WorkflowDescriptor,
    handler: Handler,
}

/// The request handler of one middleware instance. Handler executions are
/// serialized per instance.
#[derive(Default)]
struct Endpoint {
    workflows: RwLock<BTreeMap<Iri, Bound>>,
    serial: Mutex<()>,
}

impl RequestHandler for Endpoint {
    fn handle(&self, request: &InvocationRequest) -> Result<String, Fault> {
        let bound = self
            .workflows
            .read()
            .expect("endpoint table")
            .get(&request.workflow)
            .cloned()
            .ok_or_else(|| Fault::UnknownWorkflow {
                workflow: request.workflow.clone(),
            })?;
        let args = check_arguments(&bound.descriptor, &request.args)?;
        let _serial = self.serial.lock().unwrap_or_else(|p| p.into_inner());
        (bound.handler)(&args)
    }
}

/// One discovery hit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Discovered {
    pub workflow: Iri,
    pub address: String,
    pub service: Iri,
    pub resource: Option<Iri>,
}

/// Classes equal to or below `class` in the subclass hierarchy.
fn subclasses(view: &dyn TripleSource, class: &Iri) -> BTreeSet<Iri> {
    let sub = Term::Iri(rdfs::sub_class_of());
    let mut out = BTreeSet::new();
    let mut stack = vec![class.clone()];
    while let Some(c) = stack.pop() {
        if !out.insert(c.clone()) {
            continue;
        }
        for s in view.subjects(&sub, &Term::Iri(c)) {
            if let Term::Iri(s) = s {
                stack.push(s);
            }
        }
    }
    out
}

const DISCOVER_QUERY: &str = "PREFIX svc: <http://w3id.org/circularfactory/Service#>
SELECT ?workflow ?service ?address WHERE {
    ?workflow rdf:type ?class .
    ?service svc:providesWorkflow ?workflow .
    ?service svc:hasAddress ?address .
}";

/// Invokeable workflows of `class` (subclasses included): those whose hosting
/// service currently has an address. Sorted by workflow IRI.
pub fn discover(view: &dyn TripleSource, class: &Iri) -> Vec<Discovered> {
    let query = sparql::parse_query(DISCOVER_QUERY).expect("discovery query parses");
    let mut hits = BTreeSet::new();
    for c in subclasses(view, class) {
        let mut initial = Binding::new();
        initial.insert(Var::new("class"), Term::Iri(c));
        let Ok(result) = sparql::evaluate(&query, view, &initial) else {
            continue;
        };
        for row in &result.solutions().expect("select query").rows {
            let (Some(Term::Iri(workflow)), Some(Term::Iri(service)), Some(Term::Literal(address))) = (
                row.get(&Var::new("workflow")),
                row.get(&Var::new("service")),
                row.get(&Var::new("address")),
            ) else {
                continue;
            };
            let resource = view
                .objects(&Term::Iri(service.clone()), &Term::Iri(svc::is_provided_by_resource()))
                .into_iter()
                .find_map(|t| t.as_iri().cloned());
            hits.insert(Discovered {
                workflow: workflow.clone(),
                address: address.lexical().to_owned(),
                service: service.clone(),
                resource,
            });
        }
    }
    hits.into_iter().collect()
}

/// Reads a service descriptor back from the graph.
pub fn describe_service(ogm: &Ogm, service: &Iri, view: &Snapshot) -> Result<ServiceDescriptor, MiddlewareError> {
    if !ogm.is_instance_of(service, &svc::service(), view) {
        return Err(MiddlewareError::UnknownService(service.clone()));
    }
    let dv = ogm.data_view(view);
    let class = most_specific_type(&dv, service, &svc::service());
    let obj = ogm.fetch(service, &class, &ScopeSpec::shallow(), view)?;
    let mut workflows = Vec::new();
    for w in obj.links(&svc::provides_workflow()) {
        let wclass = most_specific_type(&dv, w, &svc::workflow());
        let wobj = ogm.fetch(w, &wclass, &ScopeSpec::shallow(), view)?;
        let param = |iri: &Iri| -> Result<ParameterSpec, MiddlewareError> {
            let class = if ogm.is_instance_of(iri, &svc::outcome(), view) {
                svc::outcome()
            } else {
                svc::parameter()
            };
            let p = ogm.fetch(iri, &class, &ScopeSpec::shallow(), view)?;
            Ok(ParameterSpec {
                name: p.literal(&svc::parameter_name()).map(|l| l.lexical().to_owned()).unwrap_or_default(),
                datatype: p
                    .literal(&svc::parameter_datatype())
                    .and_then(|l| Iri::new(l.lexical()).ok())
                    .unwrap_or_else(crate::vocab::xsd::string),
            })
        };
        let mut parameters = wobj
            .links(&svc::has_parameter())
            .into_iter()
            .map(param)
            .collect::<Result<Vec<_>, _>>()?;
        parameters.sort_by(|a, b| a.name.cmp(&b.name));
        let outcome = wobj.link(&svc::has_outcome()).map(param).transpose()?;
        workflows.push(WorkflowDescriptor {
            iri: w.clone(),
            class: wclass,
            parameters,
            outcome,
        });
    }
    Ok(ServiceDescriptor {
        iri: service.clone(),
        class,
        provided_by: obj.link(&svc::is_provided_by_resource()).cloned(),
        address: obj.literal(&svc::has_address()).map(|l| l.lexical().to_owned()),
        workflows,
    })
}

/// The asserted type of `iri` below `base` with the longest superclass chain.
fn most_specific_type(view: &dyn TripleSource, iri: &Iri, base: &Iri) -> Iri {
    let below = subclasses(view, base);
    let mut types: Vec<Iri> = view
        .objects(&Term::Iri(iri.clone()), &Term::Iri(rdf::type_()))
        .into_iter()
        .filter_map(|t| t.as_iri().cloned())
        .filter(|t| below.contains(t))
        .collect();
    types.sort_by_key(|t| std::cmp::Reverse(ancestor_count(view, t)));
    types.into_iter().next().unwrap_or_else(|| base.clone())
}

fn ancestor_count(view: &dyn TripleSource, class: &Iri) -> usize {
    let sub = Term::Iri(rdfs::sub_class_of());
    let mut seen = BTreeSet::new();
    let mut stack = vec![Term::Iri(class.clone())];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            stack.extend(view.objects(&c, &sub));
        }
    }
    seen.len()
}

/// Wraps one service: its graph registration, transport endpoint and peer calls.
pub struct Middleware {
    ogm: Arc<Ogm>,
    transport: Arc<dyn Transport>,
    endpoint: Arc<Endpoint>,
    address: Mutex<Option<String>>,
}

impl Middleware {
    pub fn new(ogm: Arc<Ogm>, transport: Arc<dyn Transport>) -> Self {
        Self {
            ogm,
            transport,
            endpoint: Arc::new(Endpoint::default()),
            address: Mutex::new(None),
        }
    }

    pub fn ogm(&self) -> &Arc<Ogm> {
        &self.ogm
    }

    pub fn transport(&self) -> &Arc<dyn Transport> {
        &self.transport
    }

    /// Endpoint address while bound.
    pub fn address(&self) -> Option<String> {
        self.address.lock().expect("address").clone()
    }

    fn ensure_bound(&self) -> Result<String, TransportError> {
        let mut guard = self.address.lock().expect("address");
        if let Some(a) = guard.as_ref() {
            return Ok(a.clone());
        }
        let endpoint: Arc<dyn RequestHandler> = self.endpoint.clone();
        let a = self.transport.bind(endpoint)?;
        *guard = Some(a.clone());
        Ok(a)
    }

    /// Binds handlers and commits the service and workflow individuals with
    /// the endpoint address. Re-registration reuses existing individuals.
    pub fn register_service(
        &self,
        descriptor: &ServiceDescriptor,
        handlers: impl IntoIterator<Item = (Iri, Handler)>,
    ) -> Result<TxnId, MiddlewareError> {
        let mut handlers: BTreeMap<Iri, Handler> = handlers.into_iter().collect();
        let mut table = BTreeMap::new();
        for w in &descriptor.workflows {
            let handler = handlers.remove(&w.iri).ok_or_else(|| MiddlewareError::MissingHandler(w.iri.clone()))?;
            table.insert(
                w.iri.clone(),
                Bound {
                    descriptor: w.clone(),
                    handler,
                },
            );
        }
        let address = self.ensure_bound()?;
        *self.endpoint.workflows.write().expect("endpoint table") = table;

        let view = self.ogm.snapshot();
        let obtain = |class: &Iri, iri: &Iri| -> Result<GraphObject, OgmError> {
            if self.ogm.is_instance_of(iri, class, &view) {
                self.ogm.fetch(iri, class, &ScopeSpec::shallow(), &view)
            } else {
                self.ogm.create(class, iri)
            }
        };
        let mut objects = Vec::new();
        let mut service = obtain(&descriptor.class, &descriptor.iri)?;
        service.set_one(&svc::has_address(), Literal::string(&address))?;
        if let Some(r) = &descriptor.provided_by {
            service.set_one(&svc::is_provided_by_resource(), r.clone())?;
        }
        service.set(
            &svc::provides_workflow(),
            descriptor.workflows.iter().map(|w| Value::reference(w.iri.clone())).collect(),
        )?;
        objects.push(service);
        for w in &descriptor.workflows {
            let mut wobj = obtain(&w.class, &w.iri)?;
            let mut params = Vec::new();
            for p in &w.parameters {
                let iri = Iri::new(format!("{}/parameter/{}", w.iri.as_str(), p.name)).map_err(|e| OgmError::Store(e.into()))?;
                objects.push(self.parameter_object(&svc::parameter(), &iri, p, &obtain)?);
                params.push(Value::reference(iri));
            }
            wobj.set(&svc::has_parameter(), params)?;
            if let Some(o) = &w.outcome {
                let iri = Iri::new(format!("{}/outcome", w.iri.as_str())).map_err(|e| OgmError::Store(e.into()))?;
                objects.push(self.parameter_object(&svc::outcome(), &iri, o, &obtain)?);
                wobj.set_one(&svc::has_outcome(), iri)?;
            }
            objects.push(wobj);
        }
        let mut refs: Vec<&mut GraphObject> = objects.iter_mut().collect();
        Ok(self.ogm.commit(&mut refs)?)
    }

    fn parameter_object(
        &self,
        class: &Iri,
        iri: &Iri,
        spec: &ParameterSpec,
        obtain: &dyn Fn(&Iri, &Iri) -> Result<GraphObject, OgmError>,
    ) -> Result<GraphObject, OgmError> {
        let mut p = obtain(class, iri)?;
        p.set_one(&svc::parameter_name(), Literal::string(&spec.name))?;
        p.set_one(&svc::parameter_datatype(), Literal::any_uri(spec.datatype.as_str()))?;
        Ok(p)
    }

    /// Retracts the service's address, leaving its individuals in place.
    /// Idempotent: an offline service yields the current head.
    pub fn deregister_service(&self, service: &Iri) -> Result<TxnId, MiddlewareError> {
        let view = self.ogm.snapshot();
        if !self.ogm.is_instance_of(service, &svc::service(), &view) {
            return Err(MiddlewareError::UnknownService(service.clone()));
        }
        let dv = self.ogm.data_view(&view);
        let class = most_specific_type(&dv, service, &svc::service());
        let mut obj = self
            .ogm
            .fetch(service, &class, &ScopeSpec::shallow().only([svc::has_address()]), &view)?;
        let old = obj.literal(&svc::has_address()).map(|l| l.lexical().to_owned());
        let txn = match old {
            Some(_) => {
                obj.clear(&svc::has_address())?;
                self.ogm.commit_one(&mut obj)?
            }
            None => self.ogm.store().head(),
        };
        let mut guard = self.address.lock().expect("address");
        if let (Some(mine), Some(old)) = (guard.as_ref(), old.as_ref()) {
            if mine == old {
                self.transport.unbind(mine);
                *guard = None;
            }
        }
        Ok(txn)
    }

    pub fn discover(&self, class: &Iri) -> Vec<Discovered> {
        let view = self.ogm.snapshot();
        discover(&self.ogm.data_view(&view), class)
    }

    /// Calls a peer workflow at `address`.
    pub fn invoke(&self, workflow: &Iri, address: &str, args: BTreeMap<String, String>) -> Result<String, Fault> {
        self.transport.call(
            address,
            &InvocationRequest {
                workflow: workflow.clone(),
                args,
            },
        )
    }
}

impl Drop for Middleware {
    fn drop(&mut self) {
        if let Some(a) = self.address.get_mut().ok().and_then(|a| a.take()) {
            self.transport.unbind(&a);
        }
    }
}

#[cfg(test)]
mod tests;
