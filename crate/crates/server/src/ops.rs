use std::path::PathBuf;
use std::sync::Arc;

use chrono::Utc;

use kapps_core::flexconveyor::{run_simulation, SimConfig};
use kapps_core::history::PointInTime;
use kapps_core::middleware::{self, Discovered};
use kapps_core::shacl::{self, ReportOptions, ValidationScope};
use kapps_core::sparql::{self, Binding};
use kapps_core::store::{DataView, Snapshot, Store, TransactionDelta};
use kapps_core::term::{Iri, Quad, Triple};
use kapps_core::timeseries::TsStore;
use kapps_core::turtle;
use kapps_core::unscrew::{self, LoopConfig, DEFAULT_MIN_OPERATIONS};
use kapps_core::vocab::{default_graph, ontology_graph, shapes_graph, standard_prefixes, svc};
use kapps_core::wire::*;

use crate::ApiError;

/// Actor recorded for data loaded through the service.
pub const CLIENT_ACTOR: &str = "urn:kapps:client";

fn parse_iri(s: &str) -> Result<Iri, ApiError> {
    Iri::new(s).map_err(|e| ApiError::usage(e.to_string()))
}

fn parse_point(s: &str) -> Result<PointInTime, ApiError> {
    s.parse().map_err(ApiError::usage)
}

fn data_quads(snapshot: &Snapshot) -> Vec<Quad> {
    let skip = [shapes_graph(), ontology_graph()];
    snapshot
        .quads()
        .into_iter()
        .filter(|q| !q.graph.as_iri().is_some_and(|g| skip.contains(g)))
        .collect()
}

fn dump_snapshot(snapshot: &Snapshot) -> DumpResponse {
    let quads = data_quads(snapshot);
    DumpResponse {
        txn: snapshot.txn_id().0,
        quads: quads.len(),
        turtle: turtle::serialize_quads(&quads, &standard_prefixes()),
    }
}

pub fn status(store: &Store) -> StatusResponse {
    StatusResponse {
        head: store.head().0,
        quads: store.len(),
    }
}

/// Ontology and shapes graphs load ungated; anything else passes the gate.
pub fn load(store: &Store, req: &LoadRequest) -> Result<LoadResponse, ApiError> {
    let graph = req.graph.clone().unwrap_or_else(default_graph);
    let txn = if graph == ontology_graph() || graph == shapes_graph() {
        store.load_graph(&req.turtle, &graph)?
    } else {
        let doc = turtle::parse(&req.turtle, req.base.as_deref())?;
        let mut delta = TransactionDelta::new(Iri::from_static(CLIENT_ACTOR), Utc::now());
        delta.inserts = doc.triples.into_iter().map(|t| t.in_graph(&graph)).collect();
        store.apply_transaction(delta)?
    };
    Ok(LoadResponse {
        txn: txn.0,
        quads: store.len(),
    })
}

pub fn query(store: &Store, req: &QueryRequest) -> Result<QueryResponse, ApiError> {
    let q = sparql::parse_query(&req.query)?;
    let snapshot = match &req.at {
        Some(at) => store.history().state_at(parse_point(at)?)?,
        None => store.snapshot(),
    };
    let result = sparql::evaluate(&q, &DataView::all(&snapshot), &Binding::new())?;
    let txn = snapshot.txn_id().0;
    Ok(match result.solutions() {
        Some(s) => QueryResponse {
            txn,
            variables: s.variables.iter().map(|v| v.name().to_owned()).collect(),
            rows: s
                .rows
                .iter()
                .map(|row| row.iter().map(|(v, t)| (v.name().to_owned(), t.clone())).collect())
                .collect(),
            boolean: None,
            text: sparql::solutions_to_tsv(s),
        },
        None => {
            let b = result.boolean().unwrap_or(false);
            QueryResponse {
                txn,
                variables: Vec::new(),
                rows: Vec::new(),
                boolean: Some(b),
                text: format!("{b}\n"),
            }
        }
    })
}

/// Validates supplied data (plus the store's ontology, for the class
/// hierarchy) or, without data, the store's data graphs.
pub fn validate(store: &Store, req: &ValidateRequest) -> Result<ValidateResponse, ApiError> {
    let head = store.snapshot();
    let shapes = match &req.shapes {
        Some(text) => shacl::load_shapes_from(&turtle::parse(text, None)?.triples)?,
        None => shacl::load_shapes(&head, &shapes_graph())?,
    };
    let report = match &req.data {
        Some(text) => {
            let mut triples: Vec<Triple> = turtle::parse(text, None)?.triples;
            let ontology = ontology_graph();
            triples.extend(
                head.quads()
                    .iter()
                    .filter(|q| q.graph.as_iri() == Some(&ontology))
                    .map(Quad::triple),
            );
            shacl::validate(&triples, &shapes, &ValidationScope::Full)?
        }
        None => shacl::validate(&shacl::data_view(&head, &shapes_graph()), &shapes, &ValidationScope::Full)?,
    };
    let turtle = shacl::serialize_report(
        &report,
        &ReportOptions {
            vendor_compat: req.vendor_compat,
            ..ReportOptions::default()
        },
    );
    Ok(ValidateResponse {
        conforms: report.conforms,
        report,
        turtle,
    })
}

pub fn history_list(store: &Store) -> HistoryListResponse {
    HistoryListResponse {
        entries: store
            .history()
            .entries()
            .map(|e| HistorySummary {
                txn: e.txn.0,
                timestamp: e.timestamp,
                actor: e.actor.clone(),
                inserts: e.inserts.len(),
                deletes: e.deletes.len(),
            })
            .collect(),
    }
}

pub fn history_at(store: &Store, when: &str) -> Result<DumpResponse, ApiError> {
    let snapshot = store.history().state_at(parse_point(when)?)?;
    Ok(dump_snapshot(&snapshot))
}

pub fn history_diff(store: &Store, from: &str, to: Option<&str>) -> Result<DiffResponse, ApiError> {
    let history = store.history();
    let from = history.resolve(parse_point(from)?)?;
    let to = match to {
        Some(t) => history.resolve(parse_point(t)?)?,
        None => history.head(),
    };
    let net = history.diff_range(from, to)?;
    let prefixes = standard_prefixes();
    Ok(DiffResponse {
        from: from.0,
        to: to.0,
        inserts: turtle::serialize_quads(&net.inserts, &prefixes),
        deletes: turtle::serialize_quads(&net.deletes, &prefixes),
        insert_count: net.inserts.len(),
        delete_count: net.deletes.len(),
    })
}

pub fn dump(store: &Store) -> DumpResponse {
    dump_snapshot(&store.snapshot())
}

pub fn simulate(cfg: &SimConfig) -> Result<(SimulateResponse, Arc<Store>), ApiError> {
    let outcome = run_simulation(cfg)?;
    let report = outcome.report;
    let mut text = report.to_text();
    for (i, r) in report.rejection_reports().iter().enumerate() {
        text.push_str(&format!("\n# rejection {} (attempted txn {})\n", i + 1, report.rejections[i].attempt_txn));
        text.push_str(r);
    }
    let resp = SimulateResponse {
        head: outcome.store.head().0,
        quads: outcome.store.len(),
        report,
        text,
    };
    Ok((resp, outcome.store))
}

pub fn uc1_run(store: Arc<Store>, ts: Arc<TsStore>, req: &Uc1RunRequest) -> Result<Uc1RunResponse, ApiError> {
    if req.cycles == 0 {
        return Err(ApiError::usage("cycles must be at least 1"));
    }
    let mut cfg = LoopConfig::new(req.cycles, req.learn_every);
    cfg.recordings = req.recordings.as_ref().map(PathBuf::from);
    cfg.min_operations = req.min_operations.unwrap_or(DEFAULT_MIN_OPERATIONS);
    cfg.seed = req.seed;
    cfg.mode = req.mode;
    if let Some(p) = req.initial {
        cfg.initial = p;
    }
    let report = unscrew::run_loop_with_clock(&cfg, store, ts, Arc::new(kapps_core::ogm::SystemClock))?;
    Ok(Uc1RunResponse {
        text: report.to_text(),
        report,
    })
}

pub fn uc1_trace(store: &Store, req: &TraceRequest) -> Result<TraceResponse, ApiError> {
    Ok(TraceResponse {
        trace: unscrew::trace_operation(store, &req.operation)?,
    })
}

pub fn discover(store: &Store, class: Option<&str>) -> Result<Vec<Discovered>, ApiError> {
    let class = match class {
        Some(c) => parse_iri(c)?,
        None => svc::workflow(),
    };
    let head = store.snapshot();
    Ok(middleware::discover(&shacl::data_view(&head, &shapes_graph()), &class))
}
