//! Conveyor network demonstrator: module agents move boxes through a grid
//! with a reserve/convey/receive handshake, every possession change going
//! through the gated store. Faults can be injected to bypass the protocol.

mod topology;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use topology::{commit_topology, module_iri, Direction, Topology};

use crate::middleware::{
    discover, Arguments, Fault, Handler, LocalTransport, Middleware, MiddlewareError, ParameterSpec, ServiceDescriptor,
    Transport, WorkflowDescriptor,
};
use crate::ogm::{Clock, LogicalClock, Ogm, OgmError, ScopeSpec};
use crate::shacl::{self, ShapeSet, ValidationReport, ValidationScope};
use crate::store::{Snapshot, Store, StoreError, StoreEvent, StoreListener, TripleSource};
use crate::term::{Iri, Term};
use crate::vocab::{fc, fci, rdf, shapes_graph, xsd};

/// Ticks a granted reservation stays valid.
pub const RESERVATION_TTL: u64 = 3;
/// Ticks a staged occupant box stays before it may be delivered.
pub const OCCUPY_HOLD_TICKS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FaultMode {
    #[default]
    None,
    SkipReservation,
    DeliverWhilePossessed,
}

impl FromStr for FaultMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(FaultMode::None),
            "skip-reservation" => Ok(FaultMode::SkipReservation),
            "deliver-while-possessed" => Ok(FaultMode::DeliverWhilePossessed),
            other => Err(format!("unknown fault mode `{other}`")),
        }
    }
}

impl std::fmt::Display for FaultMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FaultMode::None => "none",
            FaultMode::SkipReservation => "skip-reservation",
            FaultMode::DeliverWhilePossessed => "deliver-while-possessed",
        })
    }
}

/// When an agent in a fault mode misbehaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultTrigger {
    /// Each opportunity fires with this probability, until the agent's first
    /// rejection makes it revert to the protocol.
    Probability(f64),
    /// Fires once, at the first opportunity whose commit would be this
    /// transaction or later.
    AtTxn(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub mode: FaultMode,
    pub trigger: FaultTrigger,
    pub seed: u64,
}

impl FaultConfig {
    pub fn none() -> Self {
        Self::new(FaultMode::None)
    }

    pub fn new(mode: FaultMode) -> Self {
        Self {
            mode,
            trigger: FaultTrigger::Probability(1.0),
            seed: 0,
        }
    }
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self::none()
    }
}

/// A transaction the gate refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// The transaction number the attempt would have received.
    pub attempt_txn: u64,
    pub actor: Iri,
    pub quads_before: usize,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionEvent {
    pub attempt_txn: u64,
    pub component: Iri,
    pub focus_node: Term,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimReport {
    pub boxes: usize,
    pub delivered_count: usize,
    pub rejections: Vec<Rejection>,
    pub per_box_path: BTreeMap<Iri, Vec<Iri>>,
    pub tick_count: u64,
    /// Transactions admitted during the run.
    pub transactions: u64,
    /// Failures seen by the safety observer, if one was attached.
    pub safety_violations: Vec<String>,
    /// One line per agent action.
    pub trace: Vec<String>,
}

impl SimReport {
    /// One event per validation result of every rejected attempt.
    pub fn rejection_events(&self) -> Vec<RejectionEvent> {
        self.rejections
            .iter()
            .flat_map(|r| {
                r.report.results.iter().map(|res| RejectionEvent {
                    attempt_txn: r.attempt_txn,
                    component: res.source_constraint_component.clone(),
                    focus_node: res.focus_node.clone(),
                })
            })
            .collect()
    }

    pub fn count_component(&self, component: &Iri) -> usize {
        self.rejection_events().iter().filter(|e| &e.component == component).count()
    }

    /// Each rejection's validation report, serialized as Turtle.
    pub fn rejection_reports(&self) -> Vec<String> {
        let options = shacl::ReportOptions::default();
        self.rejections.iter().map(|r| shacl::serialize_report(&r.report, &options)).collect()
    }

    /// Plain-text summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "delivered: {}/{}", self.delivered_count, self.boxes);
        let _ = writeln!(out, "ticks: {}", self.tick_count);
        let _ = writeln!(out, "transactions: {}", self.transactions);
        let _ = writeln!(out, "rejections: {}", self.rejections.len());
        for e in self.rejection_events() {
            let _ = writeln!(out, "  txn-attempt {} {} focus {}", e.attempt_txn, e.component, e.focus_node);
        }
        let _ = writeln!(out, "safety-violations: {}", self.safety_violations.len());
        for v in &self.safety_violations {
            let _ = writeln!(out, "  {v}");
        }
        for (b, path) in &self.per_box_path {
            let hops: Vec<&str> = path.iter().map(local_name).collect();
            let _ = writeln!(out, "path {}: {}", local_name(b), hops.join(" -> "));
        }
        out
    }
}

fn local_name(iri: &Iri) -> &str {
    let s = iri.as_str();
    s.rsplit(['#', '/']).next().unwrap_or(s)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Ogm(#[from] OgmError),
    #[error(transparent)]
    Middleware(#[from] MiddlewareError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("invalid simulation setup: {0}")]
    Config(String),
}

impl SimError {
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            SimError::Ogm(e) => e.report(),
            SimError::Middleware(e) => e.report(),
            SimError::Store(StoreError::Rejected(r)) => Some(r),
            _ => None,
        }
    }
}

/// Records rejections and counts commits; optionally re-validates the full
/// graph after every admitted transaction.
struct Recorder {
    rejections: Mutex<Vec<Rejection>>,
    commits: AtomicU64,
    safety: Option<ShapeSet>,
    violations: Mutex<Vec<String>>,
}

impl StoreListener for Recorder {
    fn on_event(&self, event: &StoreEvent) {
        match event {
            StoreEvent::Rejected { actor, report, base } => {
                self.rejections.lock().expect("recorder").push(Rejection {
                    attempt_txn: base.txn_id().0 + 1,
                    actor: actor.clone(),
                    quads_before: base.len(),
                    report: report.clone(),
                });
            }
            StoreEvent::Committed { entry, snapshot } => {
                self.commits.fetch_add(1, Ordering::SeqCst);
                if let Some(shapes) = &self.safety {
                    let mut problems = Vec::new();
                    let view = shacl::data_view(snapshot, &shapes_graph());
                    match shacl::validate(&view, shapes, &ValidationScope::Full) {
                        Ok(r) if r.conforms => {}
                        Ok(r) => problems.push(format!("txn {}: {} validation result(s)", entry.txn, r.results.len())),
                        Err(e) => problems.push(format!("txn {}: validation failed: {e}", entry.txn)),
                    }
                    if let Err(msg) = check_possession(&view) {
                        problems.push(format!("txn {}: {msg}", entry.txn));
                    }
                    self.violations.lock().expect("recorder").extend(problems);
                }
            }
        }
    }
}

/// Possession conservation: InTransit boxes have exactly one possessor,
/// Created and Delivered boxes none.
pub fn check_possession(view: &dyn TripleSource) -> Result<(), String> {
    let ty = Term::Iri(rdf::type_());
    for b in view.subjects(&ty, &Term::Iri(fc::box_())) {
        let possessors = view.objects(&b, &Term::Iri(fc::is_possessed_by())).len();
        for state in view.objects(&b, &Term::Iri(fc::has_state())) {
            let in_class = |c: Iri| view.has(&state, &ty, &Term::Iri(c));
            let expected = if in_class(fc::in_transit()) { 1 } else { 0 };
            if possessors != expected {
                return Err(format!("{b} in state {state} has {possessors} possessor(s)"));
            }
        }
    }
    Ok(())
}

struct FaultState {
    config: FaultConfig,
    rng: ChaCha8Rng,
    fired: bool,
}

struct Shared {
    store: Arc<Store>,
    tick: AtomicU64,
    fault: Mutex<FaultState>,
    paths: Mutex<BTreeMap<Iri, Vec<Iri>>>,
    trace: Mutex<Vec<String>>,
}

impl Shared {
    fn log(&self, line: String) {
        tracing::debug!("{line}");
        self.trace.lock().expect("trace").push(line);
    }
}

struct AgentState {
    reservation: Option<(Iri, u64)>,
    backoff_until: u64,
    exclude: Option<Direction>,
    /// Cleared after the agent's first rejection: it then follows the protocol.
    fault_active: bool,
    held_until: BTreeMap<Iri, u64>,
    rng: ChaCha8Rng,
}

/// Agent-side logic reachable from workflow handlers.
struct AgentCore {
    module: Iri,
    ogm: Arc<Ogm>,
    shared: Arc<Shared>,
    state: Mutex<AgentState>,
}

fn box_object(ogm: &Ogm, b: &Iri, view: &Snapshot) -> Result<crate::ogm::GraphObject, OgmError> {
    ogm.fetch(b, &fc::box_(), &ScopeSpec::shallow(), view)
}

fn iri_arg(args: &Arguments, name: &str) -> Result<Iri, Fault> {
    let lexical = args.get(name).map(|l| l.lexical()).unwrap_or_default();
    Iri::new(lexical).map_err(|e| Fault::ArgumentMismatch {
        detail: format!("argument `{name}`: {e}"),
    })
}

impl AgentCore {
    fn tick(&self) -> u64 {
        self.shared.tick.load(Ordering::SeqCst)
    }

    /// Whether this agent misbehaves at the current opportunity.
    fn fault_fires(&self, mode: FaultMode) -> bool {
        if !self.state.lock().expect("agent").fault_active {
            return false;
        }
        let mut f = self.shared.fault.lock().expect("fault");
        if f.config.mode != mode {
            return false;
        }
        match f.config.trigger {
            FaultTrigger::Probability(p) => f.rng.gen_bool(p.clamp(0.0, 1.0)),
            FaultTrigger::AtTxn(n) => {
                if !f.fired && self.shared.store.head().0 + 1 >= n {
                    f.fired = true;
                    true
                } else {
                    false
                }
            }
        }
    }

    fn revert_to_protocol(&self) {
        self.state.lock().expect("agent").fault_active = false;
    }

    fn possessed(&self, view: &Snapshot) -> Vec<Iri> {
        self.ogm
            .data_view(view)
            .objects(&Term::Iri(self.module.clone()), &Term::Iri(fc::has_possession()))
            .into_iter()
            .filter_map(|t| t.as_iri().cloned())
            .collect()
    }

    fn handle_reserve(&self, args: &Arguments) -> Result<String, Fault> {
        let requester = iri_arg(args, "requester")?;
        let view = self.ogm.snapshot();
        let occupied = !self.possessed(&view).is_empty();
        let now = self.tick();
        let mut st = self.state.lock().expect("agent");
        let held_by_other = st
            .reservation
            .as_ref()
            .is_some_and(|(who, until)| *who != requester && *until >= now);
        if occupied || held_by_other {
            return Ok("denied".into());
        }
        st.reservation = Some((requester, now + RESERVATION_TTL));
        Ok("granted".into())
    }

    fn handle_convey(&self, args: &Arguments) -> Result<String, Fault> {
        let b = iri_arg(args, "box")?;
        let receiver = iri_arg(args, "receiver")?;
        let view = self.ogm.snapshot();
        let mut obj = box_object(&self.ogm, &b, &view)?;
        if obj.links(&fc::is_possessed_by()) != vec![&self.module] {
            return Err(Fault::handler(format!("{} does not possess {b}", self.module)));
        }
        obj.set_one(&fc::is_possessed_by(), receiver)?;
        let txn = self.ogm.commit_one(&mut obj)?;
        Ok(txn.to_string())
    }

    fn handle_receive(&self, args: &Arguments) -> Result<String, Fault> {
        let b = iri_arg(args, "box")?;
        let view = self.ogm.snapshot();
        let obj = box_object(&self.ogm, &b, &view)?;
        if obj.links(&fc::is_possessed_by()) != vec![&self.module] {
            return Err(Fault::handler(format!("{b} has not arrived at {}", self.module)));
        }
        {
            let mut st = self.state.lock().expect("agent");
            st.reservation = None;
        }
        if obj.link(&fc::has_destination()) != Some(&self.module) {
            return Ok("received".into());
        }
        self.deliver(&b)?;
        Ok("delivered".into())
    }

    /// Marks a box Delivered and releases it, in one transaction.
    fn deliver(&self, b: &Iri) -> Result<(), Fault> {
        if self.fault_fires(FaultMode::DeliverWhilePossessed) {
            let mut obj = box_object(&self.ogm, b, &self.ogm.snapshot())?;
            obj.set_one(&fc::has_state(), fc::state_delivered())?;
            match self.ogm.commit_one(&mut obj) {
                Err(OgmError::Rejected(report)) => {
                    self.shared.log(format!(
                        "tick {} {} deliver-while-possessed {} rejected [{}]",
                        self.tick(),
                        local_name(&self.module),
                        local_name(b),
                        components(&report)
                    ));
                    self.revert_to_protocol();
                }
                Err(e) => return Err(e.into()),
                Ok(_) => {}
            }
        }
        let mut obj = box_object(&self.ogm, b, &self.ogm.snapshot())?;
        obj.set_one(&fc::has_state(), fc::state_delivered())?;
        obj.clear(&fc::is_possessed_by())?;
        self.ogm.commit_one(&mut obj)?;
        Ok(())
    }
}

fn components(report: &ValidationReport) -> String {
    let set: BTreeSet<&str> = report.components().map(local_name).collect();
    set.into_iter().collect::<Vec<_>>().join(",")
}

/// A module's agent: its core logic plus the middleware wrapping it.
struct ModuleAgent {
    core: Arc<AgentCore>,
    middleware: Middleware,
}

fn workflow_iri(module: &Iri, kind: &str) -> Iri {
    Iri::new(format!("{}{kind}", module.as_str())).expect("workflow IRI")
}

fn module_service_descriptor(module: &Iri) -> ServiceDescriptor {
    let status = Some(ParameterSpec::new("status", xsd::string()));
    let uri = |n: &str| ParameterSpec::new(n, xsd::any_uri());
    ServiceDescriptor {
        iri: workflow_iri(module, "Service"),
        class: fc::module_service(),
        provided_by: Some(module.clone()),
        address: None,
        workflows: vec![
            WorkflowDescriptor {
                iri: workflow_iri(module, "Reserve"),
                class: fc::reserve_workflow(),
                parameters: vec![uri("requester")],
                outcome: status.clone(),
            },
            WorkflowDescriptor {
                iri: workflow_iri(module, "Convey"),
                class: fc::convey_workflow(),
                parameters: vec![uri("box"), uri("receiver")],
                outcome: status.clone(),
            },
            WorkflowDescriptor {
                iri: workflow_iri(module, "Receive"),
                class: fc::receive_workflow(),
                parameters: vec![uri("box")],
                outcome: status,
            },
        ],
    }
}

fn args(pairs: &[(&str, &Iri)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.as_str().to_owned())).collect()
}

impl ModuleAgent {
    fn start(core: Arc<AgentCore>, transport: Arc<dyn Transport>) -> Result<Self, MiddlewareError> {
        let middleware = Middleware::new(core.ogm.clone(), transport);
        let descriptor = module_service_descriptor(&core.module);
        let bind = |f: fn(&AgentCore, &Arguments) -> Result<String, Fault>| -> Handler {
            let core = core.clone();
            Arc::new(move |a: &Arguments| f(&core, a))
        };
        let handlers = vec![
            (descriptor.workflows[0].iri.clone(), bind(AgentCore::handle_reserve)),
            (descriptor.workflows[1].iri.clone(), bind(AgentCore::handle_convey)),
            (descriptor.workflows[2].iri.clone(), bind(AgentCore::handle_receive)),
        ];
        middleware.register_service(&descriptor, handlers)?;
        Ok(Self { core, middleware })
    }

    /// Address of `module`'s workflow of `class`, found by discovery.
    fn peer(&self, class: &Iri, module: &Iri) -> Option<(Iri, String)> {
        let view = self.core.ogm.snapshot();
        discover(&self.core.ogm.data_view(&view), class)
            .into_iter()
            .find(|d| d.resource.as_ref() == Some(module))
            .map(|d| (d.workflow, d.address))
    }

    fn call(&self, class: &Iri, module: &Iri, a: BTreeMap<String, String>) -> Result<String, Fault> {
        let (workflow, address) = self.peer(class, module).ok_or_else(|| Fault::Unreachable {
            detail: format!("no invokeable {} at {module}", local_name(class)),
        })?;
        self.middleware.invoke(&workflow, &address, a)
    }

    fn back_off(&self, exclude: Option<Direction>) -> u64 {
        let mut st = self.core.state.lock().expect("agent");
        let wait = st.rng.gen_range(1..=3);
        st.backoff_until = self.core.tick() + wait;
        st.exclude = exclude;
        wait
    }

    /// One scheduling turn.
    fn act(&self, topology: &Topology) {
        let core = &self.core;
        let tick = core.tick();
        let name = local_name(&core.module).to_owned();
        if core.state.lock().expect("agent").backoff_until > tick {
            return;
        }
        let view = core.ogm.snapshot();
        let Some(b) = core.possessed(&view).into_iter().next() else {
            return;
        };
        let bname = local_name(&b).to_owned();
        let Ok(obj) = box_object(&core.ogm, &b, &view) else {
            return;
        };
        let Some(dest) = obj.link(&fc::has_destination()).cloned() else {
            return;
        };
        if dest == core.module {
            if core.state.lock().expect("agent").held_until.get(&b).is_some_and(|h| *h >= tick) {
                return;
            }
            let r = self.call(&fc::receive_workflow(), &core.module, args(&[("box", &b)]));
            core.shared.log(format!("tick {tick} {name} deliver {bname} {}", outcome(&r)));
            return;
        }
        let exclude = core.state.lock().expect("agent").exclude.take();
        let Some(dir) = topology.next_hop(&core.module, &dest, exclude) else {
            return;
        };
        let receiver = topology.neighbor(&core.module, dir).expect("next hop has a neighbor").clone();
        let rname = local_name(&receiver).to_owned();
        let skip = core.fault_fires(FaultMode::SkipReservation);
        if !skip {
            match self.call(&fc::reserve_workflow(), &receiver, args(&[("requester", &core.module)])) {
                Ok(s) if s == "granted" => {}
                r => {
                    let wait = self.back_off(Some(dir));
                    core.shared.log(format!("tick {tick} {name} reserve {rname} {} backoff {wait}", outcome(&r)));
                    return;
                }
            }
        }
        let how = if skip { "convey-unreserved" } else { "convey" };
        match self.call(&fc::convey_workflow(), &core.module, args(&[("box", &b), ("receiver", &receiver)])) {
            Ok(_) => {
                core.shared
                    .paths
                    .lock()
                    .expect("paths")
                    .entry(b.clone())
                    .or_default()
                    .push(receiver.clone());
                core.shared.log(format!("tick {tick} {name} {how} {bname} {dir} {rname} ok"));
                let r = self.call(&fc::receive_workflow(), &receiver, args(&[("box", &b)]));
                core.shared.log(format!("tick {tick} {rname} receive {bname} {}", outcome(&r)));
            }
            Err(fault) => {
                if fault.report().is_some() {
                    // The report names the violated constraint; fall back to the protocol.
                    core.revert_to_protocol();
                }
                let wait = self.back_off(Some(dir));
                core.shared
                    .log(format!("tick {tick} {name} {how} {bname} {dir} {rname} {} backoff {wait}", outcome(&Err(fault))));
            }
        }
    }
}

fn outcome(r: &Result<String, Fault>) -> String {
    match r {
        Ok(s) => s.clone(),
        Err(f) => match f.report() {
            Some(report) => format!("rejected [{}]", components(report)),
            None => format!("fault: {f}"),
        },
    }
}

/// The conveyor world: topology, one agent per module, and the warehouse
/// management service that creates boxes.
pub struct Conveyor {
    store: Arc<Store>,
    topology: Topology,
    agents: Vec<ModuleAgent>,
    wms: Ogm,
    shared: Arc<Shared>,
    recorder: Arc<Recorder>,
    next_box: AtomicUsize,
}

#[derive(Clone)]
pub struct ConveyorOptions {
    pub transport: Arc<dyn Transport>,
    pub clock: Arc<dyn Clock>,
    /// Re-validate the whole graph after every admitted transaction.
    pub safety_observer: bool,
}

impl Default for ConveyorOptions {
    fn default() -> Self {
        Self {
            transport: Arc::new(LocalTransport::new()),
            clock: Arc::new(LogicalClock::default()),
            safety_observer: false,
        }
    }
}

impl Conveyor {
    /// Commits a `width`×`height` grid and registers each module's service
    /// with its Reserve, Convey and Receive workflows. The store must hold
    /// the conveyor ontology and shapes.
    pub fn build(store: Arc<Store>, width: usize, height: usize, options: ConveyorOptions) -> Result<Self, SimError> {
        if width == 0 || height == 0 {
            return Err(SimError::Config("grid dimensions must be at least 1".into()));
        }
        let safety = if options.safety_observer {
            let snap = store.snapshot();
            Some(shacl::load_shapes(&snap, &shapes_graph()).map_err(|e| SimError::Config(e.to_string()))?)
        } else {
            None
        };
        let recorder = Arc::new(Recorder {
            rejections: Mutex::new(Vec::new()),
            commits: AtomicU64::new(0),
            safety,
            violations: Mutex::new(Vec::new()),
        });
        store.add_listener(recorder.clone());
        let wms = Ogm::with_clock(store.clone(), fci::wms(), options.clock.clone());
        let topology = Topology::grid(width, height);
        commit_topology(&topology, &wms)?;
        let shared = Arc::new(Shared {
            store: store.clone(),
            tick: AtomicU64::new(0),
            fault: Mutex::new(FaultState {
                config: FaultConfig::none(),
                rng: ChaCha8Rng::seed_from_u64(0),
                fired: false,
            }),
            paths: Mutex::new(BTreeMap::new()),
            trace: Mutex::new(Vec::new()),
        });
        let mut agents = Vec::with_capacity(topology.modules.len());
        for (i, m) in topology.modules.iter().enumerate() {
            let core = Arc::new(AgentCore {
                module: m.clone(),
                ogm: Arc::new(Ogm::with_clock(store.clone(), m.clone(), options.clock.clone())),
                shared: shared.clone(),
                state: Mutex::new(AgentState {
                    reservation: None,
                    backoff_until: 0,
                    exclude: None,
                    fault_active: false,
                    held_until: BTreeMap::new(),
                    rng: ChaCha8Rng::seed_from_u64(i as u64),
                }),
            });
            agents.push(ModuleAgent::start(core, options.transport.clone())?);
        }
        Ok(Self {
            store,
            topology,
            agents,
            wms,
            shared,
            recorder,
            next_box: AtomicUsize::new(0),
        })
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Creates a box in state Created, then puts it InTransit in the origin
    /// module's possession: two transactions.
    pub fn create_box(&self, origin: &Iri, destination: &Iri) -> Result<Iri, SimError> {
        for m in [origin, destination] {
            if self.topology.index_of(m).is_none() {
                return Err(SimError::Config(format!("{m} is not a module of this grid")));
            }
        }
        let n = self.next_box.fetch_add(1, Ordering::SeqCst) + 1;
        let b = Iri::new(format!("{}Box{n}", fci::NS)).expect("box IRI");
        let mut obj = self.wms.create(&fc::box_(), &b)?;
        obj.set_one(&fc::has_state(), fc::state_created())?;
        obj.set_one(&fc::has_origin(), origin.clone())?;
        obj.set_one(&fc::has_destination(), destination.clone())?;
        self.wms.commit_one(&mut obj)?;
        let mut obj = box_object(&self.wms, &b, &self.store.snapshot())?;
        obj.set_one(&fc::has_state(), fc::state_in_transit())?;
        obj.set_one(&fc::is_possessed_by(), origin.clone())?;
        self.wms.commit_one(&mut obj)?;
        self.shared.paths.lock().expect("paths").insert(b.clone(), vec![origin.clone()]);
        Ok(b)
    }

    /// Keeps `module` from delivering `b` until after `tick`.
    pub fn hold(&self, module: &Iri, b: &Iri, tick: u64) {
        if let Some(i) = self.topology.index_of(module) {
            self.agents[i].core.state.lock().expect("agent").held_until.insert(b.clone(), tick);
        }
    }

    pub fn set_fault(&self, config: FaultConfig) {
        let mut f = self.shared.fault.lock().expect("fault");
        f.config = config;
        f.rng = ChaCha8Rng::seed_from_u64(config.seed);
        f.fired = false;
        for a in &self.agents {
            a.core.state.lock().expect("agent").fault_active = config.mode != FaultMode::None;
        }
    }

    fn agent(&self, module: &Iri) -> Result<&ModuleAgent, SimError> {
        self.topology
            .index_of(module)
            .map(|i| &self.agents[i])
            .ok_or_else(|| SimError::Config(format!("{module} is not a module of this grid")))
    }

    /// Invokes `receiver`'s Reserve workflow on behalf of `requester`.
    pub fn reserve(&self, requester: &Iri, receiver: &Iri) -> Result<String, Fault> {
        let agent = self.agent(requester).map_err(|e| Fault::handler(e.to_string()))?;
        agent.call(&fc::reserve_workflow(), receiver, args(&[("requester", requester)]))
    }

    /// Invokes `sender`'s Convey workflow.
    pub fn convey(&self, sender: &Iri, receiver: &Iri, b: &Iri) -> Result<String, Fault> {
        let agent = self.agent(sender).map_err(|e| Fault::handler(e.to_string()))?;
        agent.call(&fc::convey_workflow(), sender, args(&[("box", b), ("receiver", receiver)]))
    }

    /// Invokes `receiver`'s Receive workflow.
    pub fn receive(&self, receiver: &Iri, b: &Iri) -> Result<String, Fault> {
        let agent = self.agent(receiver).map_err(|e| Fault::handler(e.to_string()))?;
        agent.call(&fc::receive_workflow(), receiver, args(&[("box", b)]))
    }

    /// Takes a module's service offline.
    pub fn shutdown(&self, module: &Iri) -> Result<(), SimError> {
        let agent = self.agent(module)?;
        agent.middleware.deregister_service(&workflow_iri(module, "Service"))?;
        Ok(())
    }

    fn is_delivered(&self, view: &Snapshot, b: &Iri) -> bool {
        view.contains(&crate::term::Quad::iris(b, &fc::has_state(), fc::state_delivered(), &crate::vocab::default_graph()))
    }

    /// Runs agents round-robin in a seeded order each tick until every box
    /// in `boxes` is Delivered or `max_ticks` have elapsed.
    pub fn run(&self, boxes: &[Iri], seed: u64, max_ticks: u64) -> SimReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, a) in self.agents.iter().enumerate() {
            a.core.state.lock().expect("agent").rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
        }
        let commits_before = self.recorder.commits.load(Ordering::SeqCst);
        let rejections_before = self.recorder.rejections.lock().expect("recorder").len();
        let trace_before = self.shared.trace.lock().expect("trace").len();
        let mut order: Vec<usize> = (0..self.agents.len()).collect();
        let mut ticks = 0;
        while ticks < max_ticks {
            let view = self.store.snapshot();
            if boxes.iter().all(|b| self.is_delivered(&view, b)) {
                break;
            }
            ticks += 1;
            self.shared.tick.store(ticks, Ordering::SeqCst);
            order.shuffle(&mut rng);
            for &i in &order {
                self.agents[i].act(&self.topology);
            }
        }
        let view = self.store.snapshot();
        let paths = self.shared.paths.lock().expect("paths");
        SimReport {
            boxes: boxes.len(),
            delivered_count: boxes.iter().filter(|b| self.is_delivered(&view, b)).count(),
            rejections: self.recorder.rejections.lock().expect("recorder")[rejections_before..].to_vec(),
            per_box_path: boxes.iter().map(|b| (b.clone(), paths.get(b).cloned().unwrap_or_default())).collect(),
            tick_count: ticks,
            transactions: self.recorder.commits.load(Ordering::SeqCst) - commits_before,
            safety_violations: self.recorder.violations.lock().expect("recorder").clone(),
            trace: self.shared.trace.lock().expect("trace")[trace_before..].to_vec(),
        }
    }

    /// Runs every agent on its own thread, each looping over its own turns.
    /// Not deterministic; exercises the serialized write path under contention.
    pub fn run_free(&self, boxes: &[Iri], max_turns: u64) -> SimReport {
        let commits_before = self.recorder.commits.load(Ordering::SeqCst);
        std::thread::scope(|s| {
            for a in &self.agents {
                s.spawn(|| {
                    for turn in 1..=max_turns {
                        self.shared.tick.fetch_max(turn, Ordering::SeqCst);
                        let view = self.store.snapshot();
                        if boxes.iter().all(|b| self.is_delivered(&view, b)) {
                            break;
                        }
                        a.act(&self.topology);
                        std::thread::yield_now();
                    }
                });
            }
        });
        let view = self.store.snapshot();
        SimReport {
            boxes: boxes.len(),
            delivered_count: boxes.iter().filter(|b| self.is_delivered(&view, b)).count(),
            rejections: self.recorder.rejections.lock().expect("recorder").clone(),
            per_box_path: BTreeMap::new(),
            tick_count: self.shared.tick.load(Ordering::SeqCst),
            transactions: self.recorder.commits.load(Ordering::SeqCst) - commits_before,
            safety_violations: self.recorder.violations.lock().expect("recorder").clone(),
            trace: Vec::new(),
        }
    }
}

/// Parameters of a complete simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub width: usize,
    pub height: usize,
    pub boxes: usize,
    pub fault: FaultConfig,
    pub seed: u64,
    /// Defaults to `50 * (width + height) * boxes`.
    pub max_ticks: Option<u64>,
    /// 1-based module indices that hold a staged occupant box at start.
    #[serde(default)]
    pub occupy: Vec<usize>,
    #[serde(default)]
    pub safety_observer: bool,
}

impl SimConfig {
    pub fn new(width: usize, height: usize, boxes: usize) -> Self {
        Self {
            width,
            height,
            boxes,
            fault: FaultConfig::none(),
            seed: 0,
            max_ticks: None,
            occupy: Vec::new(),
            safety_observer: false,
        }
    }

    pub fn tick_budget(&self) -> u64 {
        self.max_ticks
            .unwrap_or(50 * (self.width + self.height) as u64 * self.boxes.max(1) as u64)
    }
}

/// A finished run with the store it ran against.
pub struct SimOutcome {
    pub report: SimReport,
    pub store: Arc<Store>,
}

/// Bootstraps a fresh store, builds the grid, places boxes with seeded
/// origins and destinations, and runs the simulation.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutcome, SimError> {
    run_simulation_with(config, ConveyorOptions {
        safety_observer: config.safety_observer,
        ..ConveyorOptions::default()
    })
}

pub fn run_simulation_with(config: &SimConfig, options: ConveyorOptions) -> Result<SimOutcome, SimError> {
    let store = Arc::new(crate::fixtures::bootstrap_store()?);
    let conveyor = Conveyor::build(store.clone(), config.width, config.height, options)?;
    let modules = conveyor.topology().modules.clone();
    let occupied: BTreeSet<usize> = config.occupy.iter().copied().collect();
    if let Some(bad) = occupied.iter().find(|i| **i == 0 || **i > modules.len()) {
        return Err(SimError::Config(format!("module index {bad} out of range 1..={}", modules.len())));
    }
    let mut free: Vec<usize> = (0..modules.len()).filter(|i| !occupied.contains(&(i + 1))).collect();
    if config.boxes > free.len() {
        return Err(SimError::Config(format!(
            "{} boxes need {} free modules, only {} available",
            config.boxes,
            config.boxes,
            free.len()
        )));
    }
    for &i in &occupied {
        let m = &modules[i - 1];
        let b = conveyor.create_box(m, m)?;
        conveyor.hold(m, &b, OCCUPY_HOLD_TICKS);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    free.shuffle(&mut rng);
    let mut boxes = Vec::with_capacity(config.boxes);
    for &o in free.iter().take(config.boxes) {
        let dest = if modules.len() > 1 {
            let mut d = rng.gen_range(0..modules.len() - 1);
            if d >= o {
                d += 1;
            }
            d
        } else {
            o
        };
        boxes.push(conveyor.create_box(&modules[o], &modules[dest])?);
    }
    conveyor.set_fault(config.fault);
    let report = conveyor.run(&boxes, config.seed, config.tick_budget());
    Ok(SimOutcome { report, store })
}

#[cfg(test)]
mod tests;
