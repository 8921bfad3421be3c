//! Unscrewing demonstrator: perception ingests recordings, anomaly
//! detection classifies each operation against the screw type's detection
//! parameters, and learning writes updated parameters back. The three roles
//! share nothing but the knowledge graph.

pub mod corpus;
mod workflow;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use workflow::{
    classify, create_operation, ingest_recording, ingest_series, learn, read_parameters, run_loop, setup_uc1,
    trace_operation, AnalysisService, ClassifyOutcome, CycleReport, LearnEvent, LearnOutcome, LoopConfig, LoopMode,
    LoopReport, OperationTrace, RecordSet, Roles, run_loop_with_clock,
};

use crate::middleware::MiddlewareError;
use crate::ogm::OgmError;
use crate::sparql::SparqlError;
use crate::term::Iri;
use crate::timeseries::{Series, TimeSeriesError};

pub const TORQUE_CHANNEL: &str = "torque_My";
pub const FORCE_CHANNEL: &str = "force_Fy";
pub const POSITION_CHANNEL: &str = "position_Py";
pub const TORQUE_UNIT: &str = "N·m";
pub const FORCE_UNIT: &str = "N";
pub const POSITION_UNIT: &str = "mm";
/// Completed operations required before learning; overridable per call.
pub const DEFAULT_MIN_OPERATIONS: usize = 10;

/// Thresholds stored on the screw type instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParameters {
    /// N·m
    pub torque_lower: f64,
    /// N·m
    pub torque_upper: f64,
    /// N
    pub max_axial_force: f64,
    /// mm
    pub min_travel: f64,
    /// mm
    pub max_travel: f64,
}

impl DetectionParameters {
    /// Seeded starting values.
    pub const INITIAL: DetectionParameters = DetectionParameters {
        torque_lower: 0.1,
        torque_upper: 10.0,
        max_axial_force: 50.0,
        min_travel: 2.0,
        max_travel: 15.0,
    };

    pub fn check(&self) -> Result<(), String> {
        let all = [self.torque_lower, self.torque_upper, self.max_axial_force, self.min_travel, self.max_travel];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("detection parameters must be finite".into());
        }
        if self.torque_lower >= self.torque_upper {
            return Err(format!("torque lower limit {} is not below upper limit {}", self.torque_lower, self.torque_upper));
        }
        if self.min_travel >= self.max_travel {
            return Err(format!("minimum travel {} is not below maximum travel {}", self.min_travel, self.max_travel));
        }
        if self.max_axial_force <= 0.0 {
            return Err(format!("maximum axial force {} is not positive", self.max_axial_force));
        }
        Ok(())
    }
}

impl Default for DetectionParameters {
    fn default() -> Self {
        Self::INITIAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Success,
    MissingScrew,
    OccludedOrRoundedHead,
    LooseAnchor,
    StuckScrew,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Success,
        Label::MissingScrew,
        Label::OccludedOrRoundedHead,
        Label::LooseAnchor,
        Label::StuckScrew,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Success => "success",
            Label::MissingScrew => "missing_screw",
            Label::OccludedOrRoundedHead => "occluded_or_rounded_head",
            Label::LooseAnchor => "loose_anchor",
            Label::StuckScrew => "stuck_screw",
        }
    }

    pub fn is_success(self) -> bool {
        self == Label::Success
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

/// Scalar features of one operation's three recordings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub torque_peak: f64,
    pub force_peak: f64,
    /// Extent of the position trace, max minus min.
    pub travel: f64,
}

impl Features {
    pub fn from_series(torque: &Series, force: &Series, position: &Series) -> Option<Self> {
        Some(Self {
            torque_peak: torque.max_value()?,
            force_peak: force.max_value()?,
            travel: position.max_value()? - position.min_value()?,
        })
    }
}

/// The rule table. The occluded-head rule is checked before the other
/// low-torque rules since its condition is the more specific one.
pub fn classify_features(f: &Features, p: &DetectionParameters) -> Label {
    let low_torque = f.torque_peak < p.torque_lower;
    if f.force_peak > p.max_axial_force && low_torque {
        Label::OccludedOrRoundedHead
    } else if low_torque && f.travel < p.min_travel {
        Label::MissingScrew
    } else if low_torque {
        Label::LooseAnchor
    } else if f.torque_peak >= p.torque_upper {
        Label::StuckScrew
    } else if f.travel >= p.min_travel && f.travel <= p.max_travel {
        Label::Success
    } else {
        Label::StuckScrew
    }
}

/// Percentile with linear interpolation between closest ranks
/// (rank `p/100 * (n-1)` over the sorted values).
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Parameter estimates from the features of successful operations.
pub fn estimate(successes: &[Features]) -> Option<DetectionParameters> {
    let torque: Vec<f64> = successes.iter().map(|f| f.torque_peak).collect();
    let force: Vec<f64> = successes.iter().map(|f| f.force_peak).collect();
    let travel: Vec<f64> = successes.iter().map(|f| f.travel).collect();
    Some(DetectionParameters {
        torque_lower: 0.8 * percentile(&torque, 5.0)?,
        torque_upper: 1.2 * percentile(&torque, 95.0)?,
        max_axial_force: 1.2 * percentile(&force, 95.0)?,
        min_travel: 0.8 * percentile(&travel, 5.0)?,
        max_travel: 1.2 * percentile(&travel, 95.0)?,
    })
}

#[derive(Debug, Error)]
pub enum UnscrewError {
    #[error(transparent)]
    Ogm(#[from] OgmError),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error(transparent)]
    Middleware(#[from] MiddlewareError),
    #[error(transparent)]
    Query(#[from] SparqlError),
    #[error("{0} does not reference one recording per channel")]
    MissingRecords(Iri),
    #[error("{0} does not carry all five detection parameters")]
    MissingParameters(Iri),
    #[error("learning needs {need} completed operations, found {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("learned parameters rejected: {0}")]
    InvalidParameters(String),
    #[error("{0}")]
    Input(String),
    #[error("workflow invocation failed: {0}")]
    Invocation(crate::middleware::Fault),
    #[error("{0} has not been classified")]
    NotClassified(Iri),
}
