use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower::ServiceExt;

use kapps_core::flexconveyor::{FaultConfig, FaultMode, SimConfig};
use kapps_core::term::Iri;
use kapps_core::wire::*;
use kapps_server::{router, AppState};

fn app() -> Router {
    router(Arc::new(AppState::bootstrap().unwrap()))
}

async fn call<T: DeserializeOwned>(app: &Router, req: Request<Body>) -> (StatusCode, T) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&bytes)));
    (status, body)
}

fn post(path: &str, body: &impl Serialize) -> Request<Body> {
    Request::post(path)
        .header("content-type", "application/json")
        .body(Body::from(serde_json::to_vec(body).unwrap()))
        .unwrap()
}

fn get(path: &str) -> Request<Body> {
    Request::get(path).body(Body::empty()).unwrap()
}

const BOX_DATA: &str = "@prefix fc: <http://w3id.org/circularfactory/FlexConveyor#> .
@prefix fci: <http://w3id.org/circularfactory/FlexConveyorInstances#> .
fci:M1 a fc:FlexConveyorModule .
fci:B1 a fc:Box ; fc:hasState fc:StateInTransit ; fc:isPossessedBy fci:M1 .
";

#[tokio::test]
async fn load_query_and_time_travel() {
    let app = app();
    let (s, before): (_, StatusResponse) = call(&app, get("/status")).await;
    assert_eq!(s, StatusCode::OK);

    let (s, loaded): (_, LoadResponse) = call(
        &app,
        post(
            "/graphs/load",
            &LoadRequest {
                turtle: BOX_DATA.into(),
                graph: None,
                base: None,
            },
        ),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(loaded.txn, before.head + 1);

    let q = "PREFIX fc: <http://w3id.org/circularfactory/FlexConveyor#> SELECT ?b WHERE { ?b a fc:Box }";
    let (_, now): (_, QueryResponse) = call(
        &app,
        post(
            "/query",
            &QueryRequest {
                query: q.into(),
                at: None,
            },
        ),
    )
    .await;
    assert_eq!(now.variables, vec!["b".to_string()]);
    assert_eq!(now.rows.len(), 1);

    let (_, past): (_, QueryResponse) = call(
        &app,
        post(
            "/query",
            &QueryRequest {
                query: q.into(),
                at: Some(before.head.to_string()),
            },
        ),
    )
    .await;
    assert_eq!(past.txn, before.head);
    assert!(past.rows.is_empty());

    let (_, diff): (_, DiffResponse) = call(&app, get(&format!("/history/diff?from={}", before.head))).await;
    assert_eq!(diff.insert_count, 4);
    assert_eq!(diff.delete_count, 0);

    let (_, hist): (_, HistoryListResponse) = call(&app, get("/history")).await;
    let last = hist.entries.last().unwrap();
    assert_eq!(last.txn, loaded.txn);
    assert_eq!(last.actor.as_str(), "urn:kapps:client");

    let (_, at): (_, DumpResponse) = call(&app, get(&format!("/history/at/{}", before.head))).await;
    assert_eq!(at.quads, 0);
    let (_, dump): (_, DumpResponse) = call(&app, get("/dump")).await;
    assert_eq!(dump.quads, 4);
}

#[tokio::test]
async fn gated_load_is_rejected_with_report() {
    let app = app();
    let data = "@prefix fc: <http://w3id.org/circularfactory/FlexConveyor#> .
@prefix fci: <http://w3id.org/circularfactory/FlexConveyorInstances#> .
fci:M1 a fc:FlexConveyorModule ; fc:hasPossession fci:B1, fci:B2 .
fci:B1 a fc:Box . fci:B2 a fc:Box .
";
    let (_, before): (_, StatusResponse) = call(&app, get("/status")).await;
    let (s, err): (_, ErrorBody) = call(
        &app,
        post(
            "/graphs/load",
            &LoadRequest {
                turtle: data.into(),
                graph: None,
                base: None,
            },
        ),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err.kind, ErrorKind::Rejected);
    let report = err.report.unwrap();
    assert!(!report.conforms);
    assert!(report
        .components()
        .any(|c| c.as_str() == "http://www.w3.org/ns/shacl#MaxCountConstraintComponent"));
    let (_, after): (_, StatusResponse) = call(&app, get("/status")).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn malformed_inputs_are_usage_errors() {
    let app = app();
    let (s, err): (_, ErrorBody) = call(
        &app,
        post(
            "/query",
            &QueryRequest {
                query: "SELEC".into(),
                at: None,
            },
        ),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err.kind, ErrorKind::Usage);

    let (s, err): (_, ErrorBody) = call(
        &app,
        post(
            "/graphs/load",
            &LoadRequest {
                turtle: "<a> <b> .".into(),
                graph: None,
                base: None,
            },
        ),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(err.kind, ErrorKind::Usage);

    let (s, err): (_, ErrorBody) = call(&app, get("/history/at/999999")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(err.kind, ErrorKind::NotFound);
}

#[tokio::test]
async fn validate_supplied_data_against_supplied_shapes() {
    let app = app();
    let bad = "@prefix fc: <http://w3id.org/circularfactory/FlexConveyor#> .
@prefix fci: <http://w3id.org/circularfactory/FlexConveyorInstances#> .
fci:B1 a fc:Box ; fc:hasState fc:StateInTransit ; fc:isPossessedBy fci:M1, fci:M2 .
";
    let req = ValidateRequest {
        data: Some(bad.into()),
        shapes: Some(kapps_core::fixtures::INTRANSIT_SHAPE.into()),
        vendor_compat: false,
    };
    let (s, resp): (_, ValidateResponse) = call(&app, post("/validate", &req)).await;
    assert_eq!(s, StatusCode::OK);
    assert!(!resp.conforms);
    assert!(resp.turtle.contains("sh:SPARQLConstraintComponent"));

    let req = ValidateRequest {
        data: Some(BOX_DATA.into()),
        ..req
    };
    let (_, resp): (_, ValidateResponse) = call(&app, post("/validate", &req)).await;
    assert!(resp.conforms, "{}", resp.turtle);
}

#[tokio::test]
async fn simulate_replaces_the_store() {
    let app = app();
    let mut cfg = SimConfig::new(2, 1, 1);
    cfg.fault = FaultConfig::new(FaultMode::SkipReservation);
    cfg.occupy = vec![2];
    let (s, resp): (_, SimulateResponse) = call(&app, post("/simulate", &cfg)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(resp.report.delivered_count, 1);
    assert_eq!(resp.report.rejections.len(), 1);
    assert!(resp.text.contains("sh:resultPath fc:hasPossession"));

    let (_, status): (_, StatusResponse) = call(&app, get("/status")).await;
    assert_eq!(status.head, resp.head);
    assert_eq!(status.quads, resp.quads);

    let (_, found): (_, Vec<kapps_core::middleware::Discovered>) = call(&app, get("/discover")).await;
    assert_eq!(found.len(), 2 * 3);
}

#[tokio::test]
async fn uc1_run_then_trace() {
    let app = app();
    let req = Uc1RunRequest {
        recordings: None,
        cycles: 12,
        learn_every: 10,
        min_operations: Some(5),
        seed: 3,
        mode: Default::default(),
        initial: None,
    };
    let (s, run): (_, Uc1RunResponse) = call(&app, post("/uc1/run", &req)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(run.report.cycles.len(), 12);
    let first = &run.report.cycles[0];
    let (s, trace): (_, TraceResponse) = call(
        &app,
        post(
            "/uc1/trace",
            &TraceRequest {
                operation: first.operation.clone(),
            },
        ),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(trace.trace.label, first.label);
    assert_eq!(trace.trace.records, first.records.uris().map(String::from).to_vec());

    let (s, err): (_, ErrorBody) = call(
        &app,
        post(
            "/uc1/trace",
            &TraceRequest {
                operation: Iri::new("http://example.org/nothing").unwrap(),
            },
        ),
    )
    .await;
    assert!(s.is_client_error(), "{s} {err:?}");
}
