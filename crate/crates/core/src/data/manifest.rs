use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labelled utterance as listed in the challenge metadata.
///
/// Audiograms are kept for completeness; no model in this crate reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    #[serde(rename = "signal")]
    pub signal_id: String,
    pub audio_path: String,
    #[serde(rename = "listener")]
    pub listener_id: String,
    #[serde(rename = "system")]
    pub system_id: String,
    /// Percentage of words correctly reported, 0-100.
    pub correctness: f64,
    #[serde(rename = "split")]
    pub split_id: u8,
    #[serde(rename = "audiogram_l")]
    pub audiogram_left: Vec<f64>,
    #[serde(rename = "audiogram_r")]
    pub audiogram_right: Vec<f64>,
}

impl SignalRecord {
    /// Correctness rescaled to [0, 1], the range of the model outputs.
    pub fn label(&self) -> f64 {
        self.correctness / 100.0
    }
}

/// Reads a JSON manifest. Relative `audio_path`s are resolved against the
/// directory holding the manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SignalRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = parse_manifest(&text).map_err(|e| match e {
        Error::Format(message) => Error::Manifest {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    for record in &mut records {
        let audio = Path::new(&record.audio_path);
        if audio.is_relative() {
            record.audio_path = base.join(audio).to_string_lossy().into_owned();
        }
    }
    Ok(records)
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(text: &str) -> Result<Vec<SignalRecord>> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let mut records = Vec::with_capacity(values.len());
    let mut seen = HashSet::new();
    for (index, value) in values.into_iter().enumerate() {
        let record: SignalRecord = serde_json::from_value(value)
            .map_err(|e| Error::Format(format!("entry {index}: {e}")))?;
        if !(record.correctness.is_finite() && (0.0..=100.0).contains(&record.correctness)) {
            return Err(Error::CorrectnessOutOfRange {
                signal: record.signal_id,
                value: record.correctness,
            });
        }
        if !(1..=3).contains(&record.split_id) {
            return Err(Error::Format(format!(
                "entry {index} ({}): split {} not in 1..=3",
                record.signal_id, record.split_id
            )));
        }
        let key = (
            record.listener_id.clone(),
            record.system_id.clone(),
            record.signal_id.clone(),
            record.split_id,
        );
        if !seen.insert(key) {
            return Err(Error::Format(format!(
                "entry {index}: duplicate record {} / {} / {} in split {}",
                record.listener_id, record.system_id, record.signal_id, record.split_id
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn save_manifest(path: impl AsRef<Path>, records: &[SignalRecord]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(records).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
