//! Request and response bodies of the HTTP/JSON service.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::flexconveyor::SimReport;
use crate::shacl::ValidationReport;
use crate::term::{Iri, Term};
use crate::unscrew::{DetectionParameters, LoopMode, LoopReport, OperationTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Malformed request: bad syntax, unknown names, out-of-range values.
    Usage,
    /// The admission gate refused a write; `report` is set.
    Rejected,
    NotFound,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub head: u64,
    pub quads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRequest {
    pub turtle: String,
    /// Target graph; the default data graph when absent.
    #[serde(default)]
    pub graph: Option<Iri>,
    /// Base IRI for relative references.
    #[serde(default)]
    pub base: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadResponse {
    pub txn: u64,
    pub quads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub query: String,
    /// Transaction id or RFC 3339 instant to query a past state.
    #[serde(default)]
    pub at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    /// The transaction the query ran against.
    pub txn: u64,
    pub variables: Vec<String>,
    pub rows: Vec<BTreeMap<String, Term>>,
    /// Set for ASK queries.
    pub boolean: Option<bool>,
    /// Tab-separated rendering of `rows`, or `true`/`false`.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidateRequest {
    /// Turtle data; the store's data graphs when absent.
    #[serde(default)]
    pub data: Option<String>,
    /// Turtle shapes; the store's shapes graph when absent.
    #[serde(default)]
    pub shapes: Option<String>,
    #[serde(default)]
    pub vendor_compat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub conforms: bool,
    pub report: ValidationReport,
    pub turtle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    pub txn: u64,
    pub timestamp: DateTime<Utc>,
    pub actor: Iri,
    pub inserts: usize,
    pub deletes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryListResponse {
    pub entries: Vec<HistorySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpResponse {
    pub txn: u64,
    pub quads: usize,
    pub turtle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResponse {
    pub from: u64,
    pub to: u64,
    pub inserts: String,
    pub deletes: String,
    pub insert_count: usize,
    pub delete_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub report: SimReport,
    /// Summary text followed by each rejection's report in Turtle.
    pub text: String,
    pub head: u64,
    pub quads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uc1RunRequest {
    /// Corpus directory on the service host; generated from `seed` when absent.
    #[serde(default)]
    pub recordings: Option<String>,
    pub cycles: usize,
    pub learn_every: usize,
    #[serde(default)]
    pub min_operations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: LoopMode,
    #[serde(default)]
    pub initial: Option<DetectionParameters>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uc1RunResponse {
    pub report: LoopReport,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRequest {
    pub operation: Iri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResponse {
    pub trace: OperationTrace,
}
