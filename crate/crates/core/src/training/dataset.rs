use serde::{Deserialize, Serialize};

use crate::data::{Channel, SignalRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureKey, FeatureSource};

/// One channel of one record, labelled with correctness / 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub key: FeatureKey,
    pub label: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleSet {
    pub examples: Vec<TrainingExample>,
    /// Records left out because a channel had no features.
    pub skipped: Vec<FeatureKey>,
}

/// Left and right channels become independent examples with the same label.
pub fn make_training_examples(records: &[SignalRecord], source: &dyn FeatureSource) -> ExampleSet {
    let mut set = ExampleSet::default();
    for r in records {
        let keys = Channel::BOTH.map(|c| FeatureKey::new(r.signal_id.clone(), c));
        match keys.iter().find(|k| !source.contains(k)) {
            Some(missing) => {
                log::warn!(
                    "skipping {}: no features for the {} channel",
                    r.signal_id,
                    missing.channel
                );
                set.skipped.push(missing.clone());
            }
            None => set.examples.extend(keys.into_iter().map(|key| TrainingExample {
                key,
                label: r.label(),
            })),
        }
    }
    set
}

pub fn mse_loss(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            predictions.len(),
            labels.len()
        )));
    }
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, l)| (p - l) * (p - l))
        .sum();
    Ok(sum / predictions.len() as f64)
}
