//! Async client for the kapps HTTP/JSON service.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use kapps_core::flexconveyor::SimConfig;
use kapps_core::middleware::Discovered;
use kapps_core::term::Iri;
use kapps_core::wire::*;

#[derive(Debug, Error)]
pub enum ClientError {
    /// The service answered with a structured error.
    #[error("{}", .0.message)]
    Api(ErrorBody),
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response ({status}): {body}")]
    Protocol { status: u16, body: String },
}

impl ClientError {
    pub fn kind(&self) -> Option<ErrorKind> {
        match self {
            ClientError::Api(b) => Some(b.kind),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, for example `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Protocol {
                status: status.as_u16(),
                body: format!("{e}: {}", String::from_utf8_lossy(&bytes)),
            });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Api(body)),
            Err(_) => Err(ClientError::Protocol {
                status: status.as_u16(),
                body: String::from_utf8_lossy(&bytes).into_owned(),
            }),
        }
    }

    async fn get<T: DeserializeOwned>(&self, path: &str, query: &[(&str, &str)]) -> Result<T> {
        let resp = self.http.get(format!("{}{path}", self.base)).query(query).send().await?;
        Self::decode(resp).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let resp = self.http.post(format!("{}{path}", self.base)).json(body).send().await?;
        Self::decode(resp).await
    }

    pub async fn status(&self) -> Result<StatusResponse> {
        self.get("/status", &[]).await
    }

    pub async fn load(&self, req: &LoadRequest) -> Result<LoadResponse> {
        self.post("/graphs/load", req).await
    }

    pub async fn query(&self, req: &QueryRequest) -> Result<QueryResponse> {
        self.post("/query", req).await
    }

    pub async fn validate(&self, req: &ValidateRequest) -> Result<ValidateResponse> {
        self.post("/validate", req).await
    }

    pub async fn history(&self) -> Result<HistoryListResponse> {
        self.get("/history", &[]).await
    }

    /// State as of a transaction id or RFC 3339 instant.
    pub async fn history_at(&self, when: &str) -> Result<DumpResponse> {
        let mut url = url::Url::parse(&format!("{}/history/at/", self.base)).map_err(|e| ClientError::Protocol {
            status: 0,
            body: format!("invalid service address {}: {e}", self.base),
        })?;
        url.path_segments_mut()
            .map_err(|_| ClientError::Protocol {
                status: 0,
                body: format!("service address {} cannot carry a path", self.base),
            })?
            .pop_if_empty()
            .push(when);
        Self::decode(self.http.get(url).send().await?).await
    }

    pub async fn history_diff(&self, from: &str, to: Option<&str>) -> Result<DiffResponse> {
        let mut q = vec![("from", from)];
        if let Some(t) = to {
            q.push(("to", t));
        }
        self.get("/history/diff", &q).await
    }

    pub async fn dump(&self) -> Result<DumpResponse> {
        self.get("/dump", &[]).await
    }

    pub async fn simulate(&self, cfg: &SimConfig) -> Result<SimulateResponse> {
        self.post("/simulate", cfg).await
    }

    pub async fn uc1_run(&self, req: &Uc1RunRequest) -> Result<Uc1RunResponse> {
        self.post("/uc1/run", req).await
    }

    pub async fn uc1_trace(&self, operation: &Iri) -> Result<TraceResponse> {
        self.post(
            "/uc1/trace",
            &TraceRequest {
                operation: operation.clone(),
            },
        )
        .await
    }

    pub async fn discover(&self, class: Option<&Iri>) -> Result<Vec<Discovered>> {
        match class {
            Some(c) => self.get("/discover", &[("class", c.as_str())]).await,
            None => self.get("/discover", &[]).await,
        }
    }
}
