use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Channel, SignalRecord};
use crate::error::{Error, Result};
use crate::exemplar::{PooledMemory, SecondaryModel};
use crate::features::{FeatureKey, FeatureSource};
use crate::model::PrimaryModel;

/// Per-model channel maximum, then the mean over the available models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetterEar {
    pub primary: Option<f64>,
    pub secondary: Option<f64>,
    pub ensemble: f64,
    /// Mean over models per channel, then the channel maximum.
    pub ensemble_then_max: f64,
    /// Some model saw only one channel.
    pub single_channel: bool,
}

fn max_of(pair: [Option<f64>; 2]) -> Option<f64> {
    pair.into_iter().flatten().reduce(f64::max)
}

/// Channel order is `[left, right]`; `None` marks a missing channel or an
/// absent model.
pub fn better_ear(primary: [Option<f64>; 2], secondary: [Option<f64>; 2]) -> Result<BetterEar> {
    let p = max_of(primary);
    let s = max_of(secondary);
    let parts: Vec<f64> = [p, s].into_iter().flatten().collect();
    if parts.is_empty() {
        return Err(Error::InvalidArgument("no channel predictions to combine".into()));
    }
    let ensemble = parts.iter().sum::<f64>() / parts.len() as f64;
    let per_channel = (0..2).filter_map(|c| {
        let v: Vec<f64> = [primary[c], secondary[c]].into_iter().flatten().collect();
        (v.len() == parts.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    });
    let ensemble_then_max = per_channel.reduce(f64::max).unwrap_or(ensemble);
    let single = |pair: [Option<f64>; 2], model: Option<f64>| {
        model.is_some() && pair.iter().filter(|v| v.is_some()).count() == 1
    };
    Ok(BetterEar {
        primary: p,
        secondary: s,
        ensemble,
        ensemble_then_max,
        single_channel: single(primary, p) || single(secondary, s),
    })
}

/// One evaluated record. Predictions are on the 0-100 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub signal_id: String,
    pub listener: String,
    pub system: String,
    pub split: u8,
    pub true_correctness: f64,
    pub pred_primary: Option<f64>,
    pub pred_secondary: Option<f64>,
    pub pred_ensemble: f64,
    pub pred_ensemble_then_max: f64,
    pub primary_left: Option<f64>,
    pub primary_right: Option<f64>,
    pub secondary_left: Option<f64>,
    pub secondary_right: Option<f64>,
    pub single_channel: bool,
}

impl PredictionRecord {
    pub fn from_better_ear(
        record: &SignalRecord,
        primary: [Option<f64>; 2],
        secondary: [Option<f64>; 2],
    ) -> Result<Self> {
        let be = better_ear(primary, secondary)?;
        let pct = |v: Option<f64>| v.map(|x| 100.0 * x);
        Ok(Self {
            signal_id: record.signal_id.clone(),
            listener: record.listener_id.clone(),
            system: record.system_id.clone(),
            split: record.split_id,
            true_correctness: record.correctness,
            pred_primary: pct(be.primary),
            pred_secondary: pct(be.secondary),
            pred_ensemble: 100.0 * be.ensemble,
            pred_ensemble_then_max: 100.0 * be.ensemble_then_max,
            primary_left: pct(primary[0]),
            primary_right: pct(primary[1]),
            secondary_left: pct(secondary[0]),
            secondary_right: pct(secondary[1]),
            single_channel: be.single_channel,
        })
    }
}

/// Models used for inference; at least one must be present.
#[derive(Debug, Clone, Copy, Default)]
pub struct Predictors<'a> {
    pub primary: Option<&'a PrimaryModel>,
    pub secondary: Option<(&'a SecondaryModel, &'a PooledMemory)>,
}

/// Predicts every record, in input order, on `workers` threads.
pub fn predict_records(
    records: &[SignalRecord],
    source: &dyn FeatureSource,
    predictors: Predictors<'_>,
    workers: usize,
) -> Result<Vec<PredictionRecord>> {
    if predictors.primary.is_none() && predictors.secondary.is_none() {
        return Err(Error::InvalidArgument("no model to evaluate".into()));
    }
    let one = |r: &SignalRecord| -> Result<PredictionRecord> {
        let mut p = [None, None];
        let mut s = [None, None];
        let mut found = false;
        for (i, c) in Channel::BOTH.into_iter().enumerate() {
            let Some(f) = source.get(&FeatureKey::new(r.signal_id.clone(), c))? else {
                log::warn!("{}: no {c} channel features, using the other ear only", r.signal_id);
                continue;
            };
            found = true;
            if let Some(m) = predictors.primary {
                p[i] = Some(m.predict(&f)?);
            }
            if let Some((m, mem)) = predictors.secondary {
                s[i] = Some(m.predict(&f, mem)?);
            }
        }
        if !found {
            return Err(Error::MissingFeatures {
                signal: r.signal_id.clone(),
                channel: "left and right".into(),
            });
        }
        PredictionRecord::from_better_ear(r, p, s)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| records.par_iter().map(one).collect())
}
