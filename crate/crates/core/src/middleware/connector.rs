use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Iri, Literal};
use crate::timeseries::{Series, TimeSeriesError};
use crate::vocab::cfc;

/// A data object exchanged through a connector: a class plus named literal
/// fields, the same shape the mapper materializes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub class: Iri,
    pub fields: BTreeMap<String, Literal>,
}

impl Message {
    pub fn new(class: Iri) -> Self {
        Self {
            class,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: Literal) -> Self {
        self.fields.insert(name.to_owned(), value);
        self
    }

    pub fn field(&self, name: &str) -> Option<&Literal> {
        self.fields.get(name)
    }
}

#[derive(Debug, Error)]
pub enum ConnectorError {
    #[error("connector is not connected")]
    NotConnected,
    #[error("connector is read-only")]
    ReadOnly,
    #[error("payload encoding: {0}")]
    Encoding(String),
    #[error(transparent)]
    Recording(#[from] TimeSeriesError),
}

/// Protocol adapter. `provide` and `consume` are legal only between
/// `connect` and `disconnect`.
pub trait Connector: Send {
    fn connect(&mut self) -> Result<(), ConnectorError>;
    fn disconnect(&mut self) -> Result<(), ConnectorError>;
    fn provide(&mut self, message: &Message) -> Result<(), ConnectorError>;
    /// Next message, or `None` when nothing is pending.
    fn consume(&mut self) -> Result<Option<Message>, ConnectorError>;
}

/// In-process queue; messages travel in their JSON encoding.
#[derive(Debug, Default)]
pub struct LoopbackConnector {
    connected: bool,
    queue: VecDeque<Vec<u8>>,
}

impl LoopbackConnector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Encoded bytes of the next pending message.
    pub fn peek_bytes(&self) -> Option<&[u8]> {
        self.queue.front().map(Vec::as_slice)
    }
}

impl Connector for LoopbackConnector {
    fn connect(&mut self) -> Result<(), ConnectorError> {
        self.connected = true;
        Ok(())
    }

    fn disconnect(&mut self) -> Result<(), ConnectorError> {
        self.connected = false;
        Ok(())
    }

    fn provide(&mut self, message: &Message) -> Result<(), ConnectorError> {
        if !self.connected {
            return Err(ConnectorError::NotConnected);
        }
        let bytes = serde_json::to_vec(message).map_err(|e| ConnectorError::Encoding(e.to_string()))?;
        self.queue.push_back(bytes);
        Ok(())
    }

    fn consume(&mut self) -> Result<Option<Message>, ConnectorError> {
        if !self.connected {
            return Err(ConnectorError::NotConnected);
        }
        self.queue
            .pop_front()
            .map(|b| serde_json::from_slice(&b).map_err(|e| ConnectorError::Encoding(e.to_string())))
            .transpose()
    }
}

/// Serves pre-recorded samples from per-channel CSV files, one message per
/// sample, interleaved by timestamp across channels.
#[derive(Debug)]
pub struct ReplayConnector {
    files: Vec<PathBuf>,
    pending: VecDeque<Message>,
    connected: bool,
}

impl ReplayConnector {
    pub fn new(files: impl IntoIterator<Item = impl AsRef<Path>>) -> Self {
        Self {
            files: files.into_iter().map(|p| p.as_ref().to_path_buf()).collect(),
            pending: VecDeque::new(),
            connected: false,
        }
    }

    pub fn sample_message(series: &Series, t: f64, value: f64) -> Message {
        Message::new(cfc::observation())
            .with("channel", Literal::string(&series.channel))
            .with("unit", Literal::string(&series.unit))
            .with("t", Literal::double(t))
            .with("value", Literal::double(value))
    }
}

impl Connector for ReplayConnector {
    fn connect(&mut self) -> Result<(), ConnectorError> {
        let mut samples: Vec<(f64, usize, Message)> = Vec::new();
        for (i, path) in self.files.iter().enumerate() {
            let text = std::fs::read_to_string(path).map_err(TimeSeriesError::from)?;
            let series = Series::parse(&text)?;
            for &(t, v) in &series.samples {
                samples.push((t, i, Self::sample_message(&series, t, v)));
            }
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        self.pending = samples.into_iter().map(|s| s.2).collect();
        self.connected = true;
        Ok(())
    }

    fn disconnect(&mut self) -> Result<(), ConnectorError> {
        self.connected = false;
        self.pending.clear();
        Ok(())
    }

    fn provide(&mut self, _message: &Message) -> Result<(), ConnectorError> {
        if !self.connected {
            return Err(ConnectorError::NotConnected);
        }
        Err(ConnectorError::ReadOnly)
    }

    fn consume(&mut self) -> Result<Option<Message>, ConnectorError> {
        if !self.connected {
            return Err(ConnectorError::NotConnected);
        }
        Ok(self.pending.pop_front())
    }
}
