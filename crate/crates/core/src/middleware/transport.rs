use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shacl::ValidationReport;
use crate::term::Iri;

/// A workflow call: argument values are lexical forms checked against the
/// parameter datatypes at the receiving endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationRequest {
    pub workflow: Iri,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
}

/// Structured failure of an invocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fault {
    #[error("argument mismatch: {detail}")]
    ArgumentMismatch { detail: String },
    #[error("endpoint unreachable: {detail}")]
    Unreachable { detail: String },
    #[error("unknown workflow {workflow}")]
    UnknownWorkflow { workflow: Iri },
    #[error("handler fault: {detail}")]
    HandlerFault {
        detail: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        report: Option<Box<ValidationReport>>,
    },
}

impl Fault {
    pub fn handler(detail: impl Into<String>) -> Self {
        Fault::HandlerFault {
            detail: detail.into(),
            report: None,
        }
    }

    /// The validation report forwarded from a rejected handler commit.
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            Fault::HandlerFault { report: Some(r), .. } => Some(r),
            _ => None,
        }
    }
}

impl From<crate::ogm::OgmError> for Fault {
    fn from(e: crate::ogm::OgmError) -> Self {
        let detail = e.to_string();
        match e {
            crate::ogm::OgmError::Rejected(report) => Fault::HandlerFault {
                detail,
                report: Some(report),
            },
            _ => Fault::handler(detail),
        }
    }
}

/// Wire form of a result: `{ok, outcome}` or `{ok: false, fault}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
}

impl From<Result<String, Fault>> for InvocationResponse {
    fn from(r: Result<String, Fault>) -> Self {
        match r {
            Ok(outcome) => Self {
                ok: true,
                outcome: Some(outcome),
                fault: None,
            },
            Err(fault) => Self {
                ok: false,
                outcome: None,
                fault: Some(fault),
            },
        }
    }
}

impl From<InvocationResponse> for Result<String, Fault> {
    fn from(r: InvocationResponse) -> Self {
        match (r.ok, r.outcome, r.fault) {
            (true, outcome, _) => Ok(outcome.unwrap_or_default()),
            (false, _, Some(f)) => Err(f),
            (false, _, None) => Err(Fault::handler("failure without fault detail")),
        }
    }
}

/// Receiving side of a transport binding.
pub trait RequestHandler: Send + Sync {
    fn handle(&self, request: &InvocationRequest) -> Result<String, Fault>;
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("cannot bind endpoint: {0}")]
    Bind(String),
}

/// Addressable request/response channel.
pub trait Transport: Send + Sync {
    /// Exposes `handler` and returns its address.
    fn bind(&self, handler: Arc<dyn RequestHandler>) -> Result<String, TransportError>;
    fn unbind(&self, address: &str);
    fn call(&self, address: &str, request: &InvocationRequest) -> Result<String, Fault>;
}

/// In-process transport with addresses `kapps-local://<node-id>`.
pub struct LocalTransport {
    namespace: String,
    next: AtomicU64,
    nodes: RwLock<HashMap<String, Arc<dyn RequestHandler>>>,
}

pub const LOCAL_SCHEME: &str = "kapps-local://";

impl Default for LocalTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl LocalTransport {
    pub fn new() -> Self {
        Self::with_namespace("node")
    }

    /// Node ids become `<namespace>-<n>`; different namespaces give
    /// different addresses for otherwise identical runs.
    pub fn with_namespace(namespace: impl Into<String>) -> Self {
        Self {
            namespace: namespace.into(),
            next: AtomicU64::new(0),
            nodes: RwLock::new(HashMap::new()),
        }
    }
}

impl Transport for LocalTransport {
    fn bind(&self, handler: Arc<dyn RequestHandler>) -> Result<String, TransportError> {
        let n = self.next.fetch_add(1, Ordering::SeqCst) + 1;
        let address = format!("{LOCAL_SCHEME}{}-{n}", self.namespace);
        self.nodes.write().expect("local transport").insert(address.clone(), handler);
        Ok(address)
    }

    fn unbind(&self, address: &str) {
        self.nodes.write().expect("local transport").remove(address);
    }

    fn call(&self, address: &str, request: &InvocationRequest) -> Result<String, Fault> {
        let handler = self.nodes.read().expect("local transport").get(address).cloned();
        match handler {
            Some(h) => h.handle(request),
            None => Err(Fault::Unreachable {
                detail: format!("no endpoint bound at {address}"),
            }),
        }
    }
}

/// Socket transport: one JSON request and one JSON response per connection,
/// addresses `tcp://host:port`.
#[derive(Default)]
pub struct TcpTransport {
    listeners: Mutex<HashMap<String, Arc<AtomicBool>>>,
}

pub const TCP_SCHEME: &str = "tcp://";
const IO_TIMEOUT: Duration = Duration::from_secs(10);

impl TcpTransport {
    pub fn new() -> Self {
        Self::default()
    }

    fn serve(stream: &mut TcpStream, handler: &dyn RequestHandler) -> std::io::Result<()> {
        stream.set_read_timeout(Some(IO_TIMEOUT))?;
        let mut body = Vec::new();
        stream.read_to_end(&mut body)?;
        let response: InvocationResponse = match serde_json::from_slice::<InvocationRequest>(&body) {
            Ok(req) => handler.handle(&req).into(),
            Err(e) => Err(Fault::ArgumentMismatch {
                detail: format!("malformed request: {e}"),
            })
            .into(),
        };
        let out = serde_json::to_vec(&response).expect("response serializes");
        stream.write_all(&out)?;
        stream.shutdown(Shutdown::Write)
    }
}

impl Transport for TcpTransport {
    fn bind(&self, handler: Arc<dyn RequestHandler>) -> Result<String, TransportError> {
        let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| TransportError::Bind(e.to_string()))?;
        let local = listener.local_addr().map_err(|e| TransportError::Bind(e.to_string()))?;
        let address = format!("{TCP_SCHEME}{local}");
        let stop = Arc::new(AtomicBool::new(false));
        self.listeners.lock().expect("tcp transport").insert(address.clone(), stop.clone());
        thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(mut stream) = conn else { continue };
                let handler = handler.clone();
                thread::spawn(move || {
                    if let Err(e) = Self::serve(&mut stream, handler.as_ref()) {
                        tracing::debug!("tcp endpoint connection failed: {e}");
                    }
                });
            }
        });
        Ok(address)
    }

    fn unbind(&self, address: &str) {
        if let Some(stop) = self.listeners.lock().expect("tcp transport").remove(address) {
            stop.store(true, Ordering::SeqCst);
            // Wake the accept loop so it observes the flag.
            if let Some(addr) = address.strip_prefix(TCP_SCHEME) {
                let _ = TcpStream::connect(addr);
            }
        }
    }

    fn call(&self, address: &str, request: &InvocationRequest) -> Result<String, Fault> {
        let unreachable = |detail: String| Fault::Unreachable { detail };
        let host = address
            .strip_prefix(TCP_SCHEME)
            .ok_or_else(|| unreachable(format!("not a tcp address: {address}")))?;
        let addr = host
            .to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
            .ok_or_else(|| unreachable(format!("cannot resolve {host}")))?;
        let exchange = || -> std::io::Result<Vec<u8>> {
            let mut stream = TcpStream::connect_timeout(&addr, IO_TIMEOUT)?;
            stream.set_read_timeout(Some(IO_TIMEOUT))?;
            stream.write_all(&serde_json::to_vec(request).expect("request serializes"))?;
            stream.shutdown(Shutdown::Write)?;
            let mut body = Vec::new();
            stream.read_to_end(&mut body)?;
            Ok(body)
        };
        let body = exchange().map_err(|e| unreachable(format!("{address}: {e}")))?;
        let response: InvocationResponse =
            serde_json::from_slice(&body).map_err(|e| unreachable(format!("{address}: malformed response: {e}")))?;
        response.into()
    }
}
