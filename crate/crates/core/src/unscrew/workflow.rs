use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::corpus::{self, Cycle};
use super::{
    classify_features, estimate, DetectionParameters, Features, Label, UnscrewError, DEFAULT_MIN_OPERATIONS,
    FORCE_CHANNEL, POSITION_CHANNEL, TORQUE_CHANNEL,
};
use crate::history::PointInTime;
use crate::middleware::{
    Arguments, Fault, Handler, LocalTransport, Middleware, ParameterSpec, ServiceDescriptor, WorkflowDescriptor,
};
use crate::ogm::{Clock, GraphObject, LogicalClock, Ogm, ScopeSpec};
use crate::sparql::{self, Binding, Var};
use crate::store::{Snapshot, Store, TxnId};
use crate::term::{Iri, Literal, Quad, Term};
use crate::timeseries::{Series, TsStore};
use crate::vocab::{default_graph, shapes_graph, us, usi, xsd};

/// URIs of one operation's three recordings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    pub torque: String,
    pub force: String,
    pub position: String,
}

impl RecordSet {
    pub fn uris(&self) -> [&str; 3] {
        [&self.torque, &self.force, &self.position]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRef {
    uri: String,
    channel: String,
    unit: String,
}

/// Stores three recordings, one per channel, and returns their URIs.
pub fn ingest_series(ts: &TsStore, series: [&Series; 3]) -> Result<RecordSet, UnscrewError> {
    let mut by_channel = BTreeMap::new();
    for s in series {
        if by_channel.insert(s.channel.as_str(), s).is_some() {
            return Err(UnscrewError::Input(format!("channel {} given twice", s.channel)));
        }
    }
    let mut take = |c: &str| -> Result<String, UnscrewError> {
        let s = by_channel
            .remove(c)
            .ok_or_else(|| UnscrewError::Input(format!("no recording for channel {c}")))?;
        Ok(ts.put(s)?)
    };
    Ok(RecordSet {
        torque: take(TORQUE_CHANNEL)?,
        force: take(FORCE_CHANNEL)?,
        position: take(POSITION_CHANNEL)?,
    })
}

/// Parses per-channel CSV files and stores their exact bytes.
pub fn ingest_recording(files: &[impl AsRef<Path>], ts: &TsStore) -> Result<RecordSet, UnscrewError> {
    let mut texts = BTreeMap::new();
    for f in files {
        let f = f.as_ref();
        let text = std::fs::read_to_string(f).map_err(|e| UnscrewError::Input(format!("{}: {e}", f.display())))?;
        let series = Series::parse(&text)?;
        if texts.insert(series.channel.clone(), text).is_some() {
            return Err(UnscrewError::Input(format!("channel {} given twice", series.channel)));
        }
    }
    let mut take = |c: &str| -> Result<String, UnscrewError> {
        let text = texts
            .remove(c)
            .ok_or_else(|| UnscrewError::Input(format!("no recording for channel {c}")))?;
        Ok(ts.put_raw(&text)?)
    };
    let set = RecordSet {
        torque: take(TORQUE_CHANNEL)?,
        force: take(FORCE_CHANNEL)?,
        position: take(POSITION_CHANNEL)?,
    };
    if let Some(extra) = texts.keys().next() {
        return Err(UnscrewError::Input(format!("unexpected channel {extra}")));
    }
    Ok(set)
}

/// Creates the screw type with initial parameters and the robot resource,
/// unless they already exist.
pub fn setup_uc1(ogm: &Ogm, params: &DetectionParameters) -> Result<TxnId, UnscrewError> {
    let view = ogm.snapshot();
    let mut objects = Vec::new();
    if !ogm.is_instance_of(&usi::screw_type(), &us::screw(), &view) {
        let mut screw = ogm.create(&us::screw(), &usi::screw_type())?;
        write_parameters(&mut screw, params)?;
        objects.push(screw);
    }
    if !ogm.is_instance_of(&usi::robot(), &us::screwing_resource(), &view) {
        objects.push(ogm.create(&us::screwing_resource(), &usi::robot())?);
    }
    let mut refs: Vec<&mut GraphObject> = objects.iter_mut().collect();
    Ok(ogm.commit(&mut refs)?)
}

fn write_parameters(screw: &mut GraphObject, p: &DetectionParameters) -> Result<(), UnscrewError> {
    screw.set_one(&us::torque_lower_limit(), Literal::double(p.torque_lower))?;
    screw.set_one(&us::torque_upper_limit(), Literal::double(p.torque_upper))?;
    screw.set_one(&us::max_axial_force(), Literal::double(p.max_axial_force))?;
    screw.set_one(&us::min_travel(), Literal::double(p.min_travel))?;
    screw.set_one(&us::max_travel(), Literal::double(p.max_travel))?;
    Ok(())
}

/// Detection parameters as currently stored on a screw type.
pub fn read_parameters(ogm: &Ogm, screw: &Iri, view: &Snapshot) -> Result<DetectionParameters, UnscrewError> {
    let obj = ogm.fetch(screw, &us::screw(), &ScopeSpec::shallow(), view)?;
    let get = |p: Iri| obj.f64(&p).ok_or_else(|| UnscrewError::MissingParameters(screw.clone()));
    Ok(DetectionParameters {
        torque_lower: get(us::torque_lower_limit())?,
        torque_upper: get(us::torque_upper_limit())?,
        max_axial_force: get(us::max_axial_force())?,
        min_travel: get(us::min_travel())?,
        max_travel: get(us::max_travel())?,
    })
}

fn operation_iri(n: usize) -> Iri {
    Iri::new(format!("{}Operation{n}", usi::NS)).expect("operation IRI")
}

/// Persists a new operation with its three recording references in one
/// commit. Its outcome stays unset until classified.
pub fn create_operation(ogm: &Ogm, screw: &Iri, resource: &Iri, records: &RecordSet) -> Result<Iri, UnscrewError> {
    let view = ogm.snapshot();
    let n = ogm.instances_of(&us::unscrewing_operation(), &view).len() + 1;
    let op = operation_iri(n);
    let mut obj = ogm.create(&us::unscrewing_operation(), &op)?;
    obj.set_one(&us::has_screw(), screw.clone())?;
    obj.set_one(&us::has_resource(), resource.clone())?;
    obj.set_one(&us::has_timestamp(), Literal::date_time(ogm.clock().now()))?;
    let mut data = Vec::new();
    for (channel, uri) in [(TORQUE_CHANNEL, &records.torque), (FORCE_CHANNEL, &records.force), (POSITION_CHANNEL, &records.position)] {
        let iri = Iri::new(format!("{}-{channel}", op.as_str())).expect("record IRI");
        let mut d = ogm.create(&us::time_series_data(), &iri)?;
        let unit = match channel {
            TORQUE_CHANNEL => super::TORQUE_UNIT,
            FORCE_CHANNEL => super::FORCE_UNIT,
            _ => super::POSITION_UNIT,
        };
        let json = serde_json::to_string(&RecordRef {
            uri: uri.clone(),
            channel: channel.into(),
            unit: unit.into(),
        })
        .expect("record reference encodes");
        d.set_one(&us::has_json_encoded_time_series_data(), Literal::string(json))?;
        data.push(d);
    }
    obj.set(
        &us::has_time_series_data(),
        data.iter().map(|d| crate::ogm::Value::reference(d.iri().clone())).collect(),
    )?;
    let mut refs: Vec<&mut GraphObject> = data.iter_mut().collect();
    refs.push(&mut obj);
    ogm.commit(&mut refs)?;
    Ok(op)
}

/// Record URIs of an operation, by channel.
fn operation_records(ogm: &Ogm, op: &GraphObject, view: &Snapshot) -> Result<RecordSet, UnscrewError> {
    let mut by_channel = BTreeMap::new();
    for d in op.links(&us::has_time_series_data()) {
        let obj = ogm.fetch(d, &us::time_series_data(), &ScopeSpec::shallow(), view)?;
        let json = obj
            .literal(&us::has_json_encoded_time_series_data())
            .ok_or_else(|| UnscrewError::MissingRecords(op.iri().clone()))?;
        let r: RecordRef =
            serde_json::from_str(json.lexical()).map_err(|_| UnscrewError::MissingRecords(op.iri().clone()))?;
        by_channel.insert(r.channel, r.uri);
    }
    let mut take = |c: &str| by_channel.remove(c).ok_or_else(|| UnscrewError::MissingRecords(op.iri().clone()));
    Ok(RecordSet {
        torque: take(TORQUE_CHANNEL)?,
        force: take(FORCE_CHANNEL)?,
        position: take(POSITION_CHANNEL)?,
    })
}

fn features_of(ogm: &Ogm, ts: &TsStore, op: &GraphObject, view: &Snapshot) -> Result<Features, UnscrewError> {
    let r = operation_records(ogm, op, view)?;
    Features::from_series(&ts.get(&r.torque)?, &ts.get(&r.force)?, &ts.get(&r.position)?)
        .ok_or_else(|| UnscrewError::MissingRecords(op.iri().clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub operation: Iri,
    pub label: Label,
    pub success: bool,
    pub features: Features,
    pub parameters: DetectionParameters,
    pub txn: TxnId,
}

/// Classifies an operation with the parameters its screw type carries right
/// now and commits the outcome onto the operation.
pub fn classify(ogm: &Ogm, ts: &TsStore, operation: &Iri) -> Result<ClassifyOutcome, UnscrewError> {
    let view = ogm.snapshot();
    let mut op = ogm.fetch(operation, &us::unscrewing_operation(), &ScopeSpec::shallow(), &view)?;
    let screw = op
        .link(&us::has_screw())
        .cloned()
        .ok_or_else(|| UnscrewError::Input(format!("{operation} has no screw")))?;
    let parameters = read_parameters(ogm, &screw, &view)?;
    let features = features_of(ogm, ts, &op, &view)?;
    let label = classify_features(&features, &parameters);
    op.set_one(&us::has_success_status(), Literal::boolean(label.is_success()))?;
    op.set_one(&us::has_anomaly_label(), Literal::string(label.as_str()))?;
    let txn = ogm.commit_one(&mut op)?;
    Ok(ClassifyOutcome {
        operation: operation.clone(),
        label,
        success: label.is_success(),
        features,
        parameters,
        txn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub parameters: DetectionParameters,
    pub completed: usize,
    pub successes: usize,
    pub txn: TxnId,
}

/// Re-estimates the screw type's parameters from its successful operations
/// and writes them back in one commit.
pub fn learn(ogm: &Ogm, ts: &TsStore, screw: &Iri, min_operations: usize) -> Result<LearnOutcome, UnscrewError> {
    let view = ogm.snapshot();
    let mut screw_obj = ogm.fetch(screw, &us::screw(), &ScopeSpec::shallow(), &view)?;
    let mut completed = 0;
    let mut successes = Vec::new();
    for op in screw_obj.links(&us::has_unscrewing_operation()) {
        let obj = ogm.fetch(op, &us::unscrewing_operation(), &ScopeSpec::shallow(), &view)?;
        let Some(status) = obj.literal(&us::has_success_status()).and_then(Literal::as_bool) else {
            continue;
        };
        completed += 1;
        if status {
            successes.push(features_of(ogm, ts, &obj, &view)?);
        }
    }
    if completed < min_operations.max(1) || successes.is_empty() {
        return Err(UnscrewError::InsufficientData {
            have: if successes.is_empty() { 0 } else { completed },
            need: min_operations.max(1),
        });
    }
    let parameters = estimate(&successes).expect("non-empty sample");
    parameters.check().map_err(UnscrewError::InvalidParameters)?;
    write_parameters(&mut screw_obj, &parameters)?;
    let txn = ogm.commit_one(&mut screw_obj)?;
    Ok(LearnOutcome {
        parameters,
        completed,
        successes: successes.len(),
        txn,
    })
}

/// Everything recoverable about a past decision from the graph and its
/// history alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationTrace {
    pub operation: Iri,
    pub resource: Iri,
    pub screw: Iri,
    /// Torque, force, position.
    pub records: Vec<String>,
    pub label: Label,
    pub success: bool,
    pub classified_at: TxnId,
    pub classified_by: Iri,
    /// Parameters on the screw type as of the classifying transaction.
    pub parameters: DetectionParameters,
}

const TRACE_PREFIXES: &str = "PREFIX us: <http://w3id.org/circularfactory/Unscrewing#>\n\
                              PREFIX prov: <http://www.w3.org/ns/prov#>\n";

fn select(view: &dyn crate::store::TripleSource, body: &str, initial: &Binding) -> Result<Vec<Binding>, UnscrewError> {
    let q = sparql::parse_query(&format!("{TRACE_PREFIXES}{body}"))?;
    Ok(sparql::evaluate(&q, view, initial)?
        .solutions()
        .map(|s| s.rows.clone())
        .unwrap_or_default())
}

fn iri_of(row: &Binding, var: &str) -> Option<Iri> {
    row.get(&Var::new(var)).and_then(Term::as_iri).cloned()
}

fn literal_of<'a>(row: &'a Binding, var: &str) -> Option<&'a Literal> {
    row.get(&Var::new(var)).and_then(Term::as_literal)
}

/// Resolves an operation's resource, recordings, outcome, and the
/// parameters in force when it was classified.
pub fn trace_operation(store: &Store, operation: &Iri) -> Result<OperationTrace, UnscrewError> {
    let head = store.snapshot();
    let view = crate::shacl::data_view(&head, &shapes_graph());
    let mut op = Binding::new();
    op.insert(Var::new("op"), Term::Iri(operation.clone()));
    let rows = select(
        &view,
        "SELECT ?resource ?screw ?label ?status WHERE { ?op us:hasResource ?resource . ?op us:hasScrew ?screw . \
         ?op us:hasAnomalyLabel ?label . ?op us:hasSuccessStatus ?status }",
        &op,
    )?;
    let row = rows.first().ok_or_else(|| UnscrewError::NotClassified(operation.clone()))?;
    let resource = iri_of(row, "resource").ok_or_else(|| UnscrewError::NotClassified(operation.clone()))?;
    let screw = iri_of(row, "screw").ok_or_else(|| UnscrewError::NotClassified(operation.clone()))?;
    let label_lit = literal_of(row, "label").cloned().ok_or_else(|| UnscrewError::NotClassified(operation.clone()))?;
    let label: Label = label_lit.lexical().parse().map_err(UnscrewError::Input)?;
    let success = literal_of(row, "status").and_then(Literal::as_bool).unwrap_or(false);

    let mut records = BTreeMap::new();
    for row in select(&view, "SELECT ?json WHERE { ?op us:hasTimeSeriesData ?d . ?d us:hasJSONEncodedTimeSeriesData ?json }", &op)? {
        let json = literal_of(&row, "json").ok_or_else(|| UnscrewError::MissingRecords(operation.clone()))?;
        let r: RecordRef = serde_json::from_str(json.lexical()).map_err(|_| UnscrewError::MissingRecords(operation.clone()))?;
        records.insert(r.channel, r.uri);
    }
    let records = [TORQUE_CHANNEL, FORCE_CHANNEL, POSITION_CHANNEL]
        .iter()
        .map(|c| records.remove(*c).ok_or_else(|| UnscrewError::MissingRecords(operation.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    // The classifying transaction is the one that last wrote the label.
    let label_quad = Quad::iris(operation, &us::has_anomaly_label(), Term::Literal(label_lit), &default_graph());
    let history = store.history();
    let entry = history
        .entries()
        .filter(|e| e.inserts.contains(&label_quad))
        .last()
        .ok_or_else(|| UnscrewError::NotClassified(operation.clone()))?;
    let (classified_at, classified_by) = (entry.txn, entry.actor.clone());
    let then = history
        .state_at(PointInTime::Txn(classified_at))
        .map_err(|e| UnscrewError::Input(e.to_string()))?;
    let then_view = crate::shacl::data_view(&then, &shapes_graph());
    let mut s = Binding::new();
    s.insert(Var::new("screw"), Term::Iri(screw.clone()));
    let rows = select(
        &then_view,
        "SELECT ?lo ?hi ?f ?tmin ?tmax WHERE { ?screw us:hasTorqueLowerLimit ?lo . ?screw us:hasTorqueUpperLimit ?hi . \
         ?screw us:hasMaxAxialForce ?f . ?screw us:hasMinTravel ?tmin . ?screw us:hasMaxTravel ?tmax }",
        &s,
    )?;
    let row = rows.first().ok_or_else(|| UnscrewError::MissingParameters(screw.clone()))?;
    let num = |v: &str| literal_of(row, v).and_then(Literal::as_f64).ok_or_else(|| UnscrewError::MissingParameters(screw.clone()));
    let parameters = DetectionParameters {
        torque_lower: num("lo")?,
        torque_upper: num("hi")?,
        max_axial_force: num("f")?,
        min_travel: num("tmin")?,
        max_travel: num("tmax")?,
    };
    Ok(OperationTrace {
        operation: operation.clone(),
        resource,
        screw,
        records,
        label,
        success,
        classified_at,
        classified_by,
        parameters,
    })
}

/// The three roles, each writing under its own actor.
pub struct Roles {
    pub perception: Ogm,
    pub detection: Arc<Ogm>,
    pub learning: Arc<Ogm>,
}

impl Roles {
    pub fn new(store: Arc<Store>, clock: Arc<dyn Clock>) -> Self {
        Self {
            perception: Ogm::with_clock(store.clone(), usi::perception(), clock.clone()),
            detection: Arc::new(Ogm::with_clock(store.clone(), usi::anomaly_detection(), clock.clone())),
            learning: Arc::new(Ogm::with_clock(store, usi::learning(), clock)),
        }
    }
}

/// Classification and learning exposed as workflows of an analysis service.
pub struct AnalysisService {
    middleware: Middleware,
}

impl AnalysisService {
    pub fn start(roles: &Roles, ts: Arc<TsStore>, min_operations: usize) -> Result<Self, UnscrewError> {
        let middleware = Middleware::new(roles.detection.clone(), Arc::new(LocalTransport::with_namespace("uc1")));
        let iri = |s: &str| Iri::new(format!("{}{s}", usi::NS)).expect("service IRI");
        let descriptor = ServiceDescriptor {
            iri: usi::analysis_service(),
            class: us::analysis_service(),
            provided_by: None,
            address: None,
            workflows: vec![
                WorkflowDescriptor {
                    iri: iri("Classify"),
                    class: us::classify_workflow(),
                    parameters: vec![ParameterSpec::new("operation", xsd::any_uri())],
                    outcome: Some(ParameterSpec::new("label", xsd::string())),
                },
                WorkflowDescriptor {
                    iri: iri("Learn"),
                    class: us::learn_workflow(),
                    parameters: vec![ParameterSpec::new("screw", xsd::any_uri())],
                    outcome: Some(ParameterSpec::new("txn", xsd::integer())),
                },
            ],
        };
        let arg = |a: &Arguments, name: &str| -> Result<Iri, Fault> {
            Iri::new(a.get(name).map(|l| l.lexical()).unwrap_or_default()).map_err(|e| Fault::ArgumentMismatch {
                detail: e.to_string(),
            })
        };
        let (detection, ts_c) = (roles.detection.clone(), ts.clone());
        let classify_h: Handler = Arc::new(move |a: &Arguments| {
            let op = arg(a, "operation")?;
            classify(&detection, &ts_c, &op).map(|o| o.label.to_string()).map_err(to_fault)
        });
        let learning = roles.learning.clone();
        let learn_h: Handler = Arc::new(move |a: &Arguments| {
            let screw = arg(a, "screw")?;
            learn(&learning, &ts, &screw, min_operations).map(|o| o.txn.0.to_string()).map_err(to_fault)
        });
        middleware.register_service(&descriptor, [(iri("Classify"), classify_h), (iri("Learn"), learn_h)])?;
        Ok(Self { middleware })
    }

    fn call(&self, class: &Iri, name: &str, value: &Iri) -> Result<String, UnscrewError> {
        let hit = self
            .middleware
            .discover(class)
            .into_iter()
            .next()
            .ok_or_else(|| UnscrewError::Input(format!("no invokeable workflow of class {class}")))?;
        let args = BTreeMap::from([(name.to_owned(), value.as_str().to_owned())]);
        self.middleware.invoke(&hit.workflow, &hit.address, args).map_err(UnscrewError::Invocation)
    }
}

fn to_fault(e: UnscrewError) -> Fault {
    match e {
        UnscrewError::Ogm(o) => o.into(),
        other => Fault::handler(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    /// The roles call each other's functions in one process.
    #[default]
    Direct,
    /// Classification and learning are invoked as discovered workflows.
    Services,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    /// Corpus directory; a seeded corpus is generated in memory when absent.
    pub recordings: Option<PathBuf>,
    pub cycles: usize,
    pub learn_every: usize,
    pub min_operations: usize,
    pub seed: u64,
    pub mode: LoopMode,
    pub initial: DetectionParameters,
}

impl LoopConfig {
    pub fn new(cycles: usize, learn_every: usize) -> Self {
        Self {
            recordings: None,
            cycles,
            learn_every,
            min_operations: DEFAULT_MIN_OPERATIONS,
            seed: 0,
            mode: LoopMode::Direct,
            initial: DetectionParameters::INITIAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    pub source: String,
    pub operation: Iri,
    pub records: RecordSet,
    pub label: Label,
    /// Label the corpus was generated with, when known.
    pub expected: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnEvent {
    pub after_cycle: usize,
    pub txn: Option<TxnId>,
    pub parameters: Option<DetectionParameters>,
    /// Why learning did not update the parameters.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub cycles: Vec<CycleReport>,
    pub learn_events: Vec<LearnEvent>,
    pub initial: DetectionParameters,
    pub final_parameters: DetectionParameters,
}

impl LoopReport {
    pub fn to_text(&self) -> String {
        let fmt_p = |p: &DetectionParameters| {
            format!(
                "torque [{}, {}] N·m, force max {} N, travel [{}, {}] mm",
                p.torque_lower, p.torque_upper, p.max_axial_force, p.min_travel, p.max_travel
            )
        };
        let mut out = String::new();
        let _ = writeln!(out, "initial: {}", fmt_p(&self.initial));
        let mut events = self.learn_events.iter().peekable();
        for c in &self.cycles {
            let expected = c.expected.map(|l| format!(" (generated {l})")).unwrap_or_default();
            let _ = writeln!(out, "cycle {:>3} {} {} -> {}{expected}", c.cycle, c.source, c.operation, c.label);
            while let Some(e) = events.next_if(|e| e.after_cycle == c.cycle) {
                match (&e.parameters, &e.skipped) {
                    (Some(p), _) => {
                        let _ = writeln!(out, "learn after cycle {} (txn {}): {}", e.after_cycle, e.txn.map(|t| t.0).unwrap_or(0), fmt_p(p));
                    }
                    (None, reason) => {
                        let _ = writeln!(out, "learn after cycle {} skipped: {}", e.after_cycle, reason.as_deref().unwrap_or(""));
                    }
                }
            }
        }
        let _ = writeln!(out, "final: {}", fmt_p(&self.final_parameters));
        out
    }
}

enum Source {
    Files(Vec<(String, Vec<PathBuf>)>, BTreeMap<String, Label>),
    Generated(Vec<Cycle>),
}

/// Runs perceive, classify and (every `learn_every` cycles) learn for the
/// configured number of cycles, wrapping around the corpus if needed.
pub fn run_loop(config: &LoopConfig, store: Arc<Store>, ts: Arc<TsStore>) -> Result<LoopReport, UnscrewError> {
    run_loop_with_clock(config, store, ts, Arc::new(LogicalClock::default()))
}

pub fn run_loop_with_clock(
    config: &LoopConfig,
    store: Arc<Store>,
    ts: Arc<TsStore>,
    clock: Arc<dyn Clock>,
) -> Result<LoopReport, UnscrewError> {
    config.initial.check().map_err(UnscrewError::InvalidParameters)?;
    let roles = Roles::new(store, clock);
    setup_uc1(&roles.perception, &config.initial)?;
    let initial = read_parameters(&roles.perception, &usi::screw_type(), &roles.perception.snapshot())?;
    let source = match &config.recordings {
        Some(dir) => Source::Files(corpus::cycle_dirs(dir)?, corpus::read_manifest(dir)?.into_iter().collect()),
        None => Source::Generated(corpus::generate(config.seed, config.cycles.max(1))),
    };
    let service = match config.mode {
        LoopMode::Services => Some(AnalysisService::start(&roles, ts.clone(), config.min_operations)?),
        LoopMode::Direct => None,
    };
    let mut cycles = Vec::with_capacity(config.cycles);
    let mut learn_events = Vec::new();
    for i in 0..config.cycles {
        let (name, records, expected) = match &source {
            Source::Files(dirs, manifest) => {
                let (name, files) = &dirs[i % dirs.len()];
                (name.clone(), ingest_recording(files, &ts)?, manifest.get(name).copied())
            }
            Source::Generated(gen) => {
                let c = &gen[i % gen.len()];
                (c.name.clone(), ingest_series(&ts, [&c.torque, &c.force, &c.position])?, Some(c.label))
            }
        };
        let op = create_operation(&roles.perception, &usi::screw_type(), &usi::robot(), &records)?;
        let label = match &service {
            Some(s) => s.call(&us::classify_workflow(), "operation", &op)?.parse().map_err(UnscrewError::Input)?,
            None => classify(&roles.detection, &ts, &op)?.label,
        };
        cycles.push(CycleReport {
            cycle: i + 1,
            source: name,
            operation: op,
            records,
            label,
            expected,
        });
        if config.learn_every > 0 && (i + 1) % config.learn_every == 0 {
            let result = match &service {
                Some(s) => s.call(&us::learn_workflow(), "screw", &usi::screw_type()).and_then(|txn| {
                    let p = read_parameters(&roles.learning, &usi::screw_type(), &roles.learning.snapshot())?;
                    Ok((TxnId(txn.parse().unwrap_or_default()), p))
                }),
                None => learn(&roles.learning, &ts, &usi::screw_type(), config.min_operations).map(|o| (o.txn, o.parameters)),
            };
            learn_events.push(match result {
                Ok((txn, p)) => LearnEvent {
                    after_cycle: i + 1,
                    txn: Some(txn),
                    parameters: Some(p),
                    skipped: None,
                },
                Err(e @ (UnscrewError::InsufficientData { .. } | UnscrewError::InvalidParameters(_) | UnscrewError::Invocation(_))) => {
                    LearnEvent {
                        after_cycle: i + 1,
                        txn: None,
                        parameters: None,
                        skipped: Some(e.to_string()),
                    }
                }
                Err(e) => return Err(e),
            });
        }
    }
    let final_parameters = read_parameters(&roles.perception, &usi::screw_type(), &roles.perception.snapshot())?;
    Ok(LoopReport {
        cycles,
        learn_events,
        initial,
        final_parameters,
    })
}
