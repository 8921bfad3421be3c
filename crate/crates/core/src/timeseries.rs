//! Per-channel recordings and the keyed store that holds them outside the graph.
//!
//! File format: a header line `<channel>,<unit>` followed by `t_seconds,value`
//! rows with strictly increasing timestamps.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

/// URI scheme of stored records.
pub const TS_SCHEME: &str = "urn:kapps:ts:";

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unknown record {0}")]
    UnknownRecord(String),
    #[error("time-series store I/O: {0}")]
    Io(#[from] std::io::Error),
}

fn format_error(line: usize, message: impl Into<String>) -> TimeSeriesError {
    TimeSeriesError::Format {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub channel: String,
    pub unit: String,
    /// `(t_seconds, value)` pairs, `t` strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(channel: impl Into<String>, unit: impl Into<String>, samples: Vec<(f64, f64)>) -> Self {
        Self {
            channel: channel.into(),
            unit: unit.into(),
            samples,
        }
    }

    pub fn parse(text: &str) -> Result<Self, TimeSeriesError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(r) => r.map_err(|e| format_error(1, e.to_string()))?,
            None => return Err(format_error(1, "missing `channel,unit` header")),
        };
        if header.len() != 2 || header[0].is_empty() {
            return Err(format_error(1, "header must be `channel,unit`"));
        }
        let mut samples: Vec<(f64, f64)> = Vec::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| format_error(line, e.to_string()))?;
            if rec.len() != 2 {
                return Err(format_error(line, format!("expected 2 fields, found {}", rec.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format_error(line, format!("not a number: {s:?}")))
            };
            let (t, v) = (num(&rec[0])?, num(&rec[1])?);
            if let Some((prev, _)) = samples.last() {
                if t <= *prev {
                    return Err(format_error(line, format!("timestamp {t} does not increase (previous {prev})")));
                }
            }
            samples.push((t, v));
        }
        Ok(Self {
            channel: header[0].to_owned(),
            unit: header[1].to_owned(),
            samples,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.channel, self.unit);
        for (t, v) in &self.samples {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    pub fn max_value(&self) -> Option<f64> {
        self.samples.iter().map(|s| s.1).reduce(f64::max)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.samples.iter().map(|s| s.1).reduce(f64::min)
    }
}

enum Backend {
    Memory(BTreeMap<String, String>),
    Dir(PathBuf),
}

/// Append-only keyed store. Records are written once and addressed by
/// `urn:kapps:ts:<id>`; the graph only ever holds these URIs.
pub struct TsStore {
    backend: Mutex<(Backend, u64)>,
}

impl TsStore {
    pub fn in_memory() -> Self {
        Self {
            backend: Mutex::new((Backend::Memory(BTreeMap::new()), 0)),
        }
    }

    /// Opens (or creates) a directory-backed store.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TimeSeriesError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut next = 0;
        for entry in fs::read_dir(&dir)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(n) = name.strip_suffix(".csv").and_then(|s| s.strip_prefix("rec")).and_then(|s| s.parse::<u64>().ok()) {
                next = next.max(n);
            }
        }
        Ok(Self {
            backend: Mutex::new((Backend::Dir(dir), next)),
        })
    }

    /// Stores a recording and returns its URI.
    pub fn put(&self, series: &Series) -> Result<String, TimeSeriesError> {
        self.put_raw(&series.to_csv())
    }

    /// Stores the exact bytes of a recording after checking they parse.
    pub fn put_raw(&self, csv_text: &str) -> Result<String, TimeSeriesError> {
        Series::parse(csv_text)?;
        let mut guard = self.backend.lock().expect("ts store lock");
        let (backend, counter) = &mut *guard;
        *counter += 1;
        let id = format!("rec{:06}", *counter);
        match backend {
            Backend::Memory(map) => {
                map.insert(id.clone(), csv_text.to_owned());
            }
            Backend::Dir(dir) => {
                let mut f = fs::OpenOptions::new().write(true).create_new(true).open(dir.join(format!("{id}.csv")))?;
                f.write_all(csv_text.as_bytes())?;
            }
        }
        Ok(format!("{TS_SCHEME}{id}"))
    }

    pub fn get_raw(&self, uri: &str) -> Result<String, TimeSeriesError> {
        let id = uri
            .strip_prefix(TS_SCHEME)
            .filter(|id| !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric()))
            .ok_or_else(|| TimeSeriesError::UnknownRecord(uri.to_owned()))?;
        let guard = self.backend.lock().expect("ts store lock");
        match &guard.0 {
            Backend::Memory(map) => map.get(id).cloned().ok_or_else(|| TimeSeriesError::UnknownRecord(uri.to_owned())),
            Backend::Dir(dir) => fs::read_to_string(dir.join(format!("{id}.csv"))).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => TimeSeriesError::UnknownRecord(uri.to_owned()),
                _ => TimeSeriesError::Io(e),
            }),
        }
    }

    pub fn get(&self, uri: &str) -> Result<Series, TimeSeriesError> {
        Series::parse(&self.get_raw(uri)?)
    }

    pub fn len(&self) -> usize {
        let guard = self.backend.lock().expect("ts store lock");
        match &guard.0 {
            Backend::Memory(map) => map.len(),
            Backend::Dir(_) => guard.1 as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
