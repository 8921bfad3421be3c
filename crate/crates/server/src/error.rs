use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

use kapps_core::flexconveyor::SimError;
use kapps_core::history::HistoryError;
use kapps_core::shacl::{ShaclError, ValidationReport};
use kapps_core::sparql::SparqlError;
use kapps_core::store::StoreError;
use kapps_core::turtle::TurtleError;
use kapps_core::unscrew::UnscrewError;
use kapps_core::wire::{ErrorBody, ErrorKind};

#[derive(Debug)]
pub struct ApiError(pub ErrorBody);

impl ApiError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self(ErrorBody {
            kind,
            message: message.into(),
            report: None,
        })
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::NotFound, message)
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Runtime, message)
    }

    pub fn rejected(message: impl Into<String>, report: ValidationReport) -> Self {
        Self(ErrorBody {
            kind: ErrorKind::Rejected,
            message: message.into(),
            report: Some(report),
        })
    }

    fn status(&self) -> StatusCode {
        match self.0.kind {
            ErrorKind::Usage => StatusCode::BAD_REQUEST,
            ErrorKind::Rejected => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Runtime => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.0)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::Rejected(report) => Self::rejected(message, *report),
            StoreError::Parse(_) | StoreError::MalformedDelta(_) => Self::usage(message),
            StoreError::Gate(_) => Self::runtime(message),
        }
    }
}

impl From<TurtleError> for ApiError {
    fn from(e: TurtleError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<SparqlError> for ApiError {
    fn from(e: SparqlError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<ShaclError> for ApiError {
    fn from(e: ShaclError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<HistoryError> for ApiError {
    fn from(e: HistoryError) -> Self {
        match e {
            HistoryError::OutOfRange { .. } => Self::not_found(e.to_string()),
            HistoryError::InvertedRange { .. } => Self::usage(e.to_string()),
        }
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        match (&e, e.report()) {
            (SimError::Config(_), _) => Self::usage(e.to_string()),
            (_, Some(r)) => Self::rejected(e.to_string(), r.clone()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<UnscrewError> for ApiError {
    fn from(e: UnscrewError) -> Self {
        let report = match &e {
            UnscrewError::Ogm(o) => o.report().cloned(),
            UnscrewError::Middleware(m) => m.report().cloned(),
            _ => None,
        };
        match (&e, report) {
            (_, Some(r)) => Self::rejected(e.to_string(), r),
            (UnscrewError::Input(_) | UnscrewError::InvalidParameters(_) | UnscrewError::Query(_), _) => {
                Self::usage(e.to_string())
            }
            (UnscrewError::NotClassified(_) | UnscrewError::MissingRecords(_), _) => Self::not_found(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}
