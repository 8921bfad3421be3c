//! Seeded synthetic recordings of unscrewing cycles.
//!
//! On disk a corpus is one directory per cycle (`cycle-0001/` ...), each
//! holding `torque_My.csv`, `force_Fy.csv` and `position_Py.csv`, plus a
//! `manifest.csv` listing the generated label of every cycle.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Features, Label, UnscrewError, FORCE_CHANNEL, FORCE_UNIT, POSITION_CHANNEL, POSITION_UNIT, TORQUE_CHANNEL, TORQUE_UNIT};
use crate::timeseries::Series;

const SAMPLES: usize = 50;
const DT: f64 = 0.02;
pub const MANIFEST: &str = "manifest.csv";

/// Share of generated cycles that succeed.
pub const SUCCESS_SHARE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub name: String,
    pub label: Label,
    pub features: Features,
    pub torque: Series,
    pub force: Series,
    pub position: Series,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestRow {
    cycle: String,
    label: Label,
}

/// Feature ranges per label: (torque peak, force peak, travel).
fn ranges(label: Label) -> [(f64, f64); 3] {
    match label {
        Label::Success => [(2.0, 8.0), (10.0, 40.0), (4.0, 12.0)],
        Label::MissingScrew => [(0.02, 0.08), (5.0, 20.0), (0.2, 1.5)],
        Label::LooseAnchor => [(0.02, 0.08), (5.0, 20.0), (5.0, 10.0)],
        Label::OccludedOrRoundedHead => [(0.02, 0.08), (60.0, 90.0), (0.3, 1.5)],
        Label::StuckScrew => [(11.0, 14.0), (20.0, 45.0), (0.5, 1.5)],
    }
}

/// A trace rising to `peak` at 30% of the window and decaying after,
/// hitting the peak exactly at one sample.
fn pulse(channel: &str, unit: &str, peak: f64) -> Series {
    let top = (SAMPLES as f64 * 0.3) as usize;
    let samples = (0..SAMPLES)
        .map(|i| {
            let shape = if i <= top {
                i as f64 / top as f64
            } else {
                1.0 - 0.8 * (i - top) as f64 / (SAMPLES - 1 - top) as f64
            };
            (i as f64 * DT, peak * shape)
        })
        .collect();
    Series::new(channel, unit, samples)
}

fn ramp(travel: f64) -> Series {
    let samples = (0..SAMPLES)
        .map(|i| (i as f64 * DT, travel * i as f64 / (SAMPLES - 1) as f64))
        .collect();
    Series::new(POSITION_CHANNEL, POSITION_UNIT, samples)
}

pub fn synthesize(name: impl Into<String>, label: Label, features: Features) -> Cycle {
    Cycle {
        name: name.into(),
        label,
        features,
        torque: pulse(TORQUE_CHANNEL, TORQUE_UNIT, features.torque_peak),
        force: pulse(FORCE_CHANNEL, FORCE_UNIT, features.force_peak),
        position: ramp(features.travel),
    }
}

/// `count` cycles; about 70% successes, the rest spread over the four
/// anomaly classes.
pub fn generate(seed: u64, count: usize) -> Vec<Cycle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=count)
        .map(|i| {
            let label = if rng.gen_bool(SUCCESS_SHARE) {
                Label::Success
            } else {
                Label::ALL[rng.gen_range(1..Label::ALL.len())]
            };
            let [m, f, t] = ranges(label).map(|(lo, hi)| rng.gen_range(lo..hi));
            synthesize(
                format!("cycle-{i:04}"),
                label,
                Features {
                    torque_peak: m,
                    force_peak: f,
                    travel: t,
                },
            )
        })
        .collect()
}

pub fn write_corpus(dir: &Path, cycles: &[Cycle]) -> Result<(), UnscrewError> {
    let io = |e: std::io::Error| UnscrewError::Input(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut manifest = csv::Writer::from_path(dir.join(MANIFEST)).map_err(|e| UnscrewError::Input(e.to_string()))?;
    for c in cycles {
        let sub = dir.join(&c.name);
        fs::create_dir_all(&sub).map_err(io)?;
        for s in [&c.torque, &c.force, &c.position] {
            fs::write(sub.join(format!("{}.csv", s.channel)), s.to_csv()).map_err(io)?;
        }
        manifest
            .serialize(ManifestRow {
                cycle: c.name.clone(),
                label: c.label,
            })
            .map_err(|e| UnscrewError::Input(e.to_string()))?;
    }
    manifest.flush().map_err(io)?;
    Ok(())
}

/// Cycle directories of a corpus in name order, each with its CSV files.
pub fn cycle_dirs(dir: &Path) -> Result<Vec<(String, Vec<PathBuf>)>, UnscrewError> {
    let io = |e: std::io::Error| UnscrewError::Input(format!("{}: {e}", dir.display()));
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if !path.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        out.push((name, files));
    }
    out.sort();
    if out.is_empty() {
        return Err(UnscrewError::Input(format!("{} holds no cycle directories", dir.display())));
    }
    Ok(out)
}

/// Generated labels by cycle name, if the corpus has a manifest.
pub fn read_manifest(dir: &Path) -> Result<Vec<(String, Label)>, UnscrewError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| UnscrewError::Input(e.to_string()))?;
    reader
        .deserialize::<ManifestRow>()
        .map(|r| r.map(|r| (r.cycle, r.label)).map_err(|e| UnscrewError::Input(format!("{}: {e}", path.display()))))
        .collect()
}
