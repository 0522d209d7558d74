use std::fmt::Write as _;
use std::sync::Arc;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::dataset::{mse_loss, TrainingExample};
use super::optim::{clip_gradient, AdamW};
use crate::data::{Channel, SignalRecord};
use crate::error::{Error, Result};
use crate::exemplar::{sample_exemplars, ExemplarMemory, MemoryManifest, PooledMemory, SecondaryModel};
use crate::features::{DecoderFeatures, FeatureKey, FeatureSource};
use crate::model::{Module, ModelKind, PrimaryModel, TrainedModel};

const STREAM_SHUFFLE: u64 = 1;
const STREAM_EXEMPLARS: u64 = 2;
const EVAL_MEMORY_OFFSET: u64 = 0x5eed;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationSets<'a> {
    pub disjoint: &'a [SignalRecord],
    pub random: &'a [SignalRecord],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    /// RMSE on the 0-100 scale, absent for an empty set.
    pub val_rmse_disjoint: Option<f64>,
    pub val_rmse_random: Option<f64>,
}

impl EpochRecord {
    fn selection_score(&self) -> f64 {
        self.val_rmse_disjoint
            .or(self.val_rmse_random)
            .unwrap_or(self.train_mse)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch of the best checkpoint.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from("epoch,train_mse,val_rmse_disjoint,val_rmse_random\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.epoch,
                r.train_mse,
                opt(r.val_rmse_disjoint),
                opt(r.val_rmse_random)
            );
        }
        s
    }
}

/// Exemplars used for one minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryDraw {
    pub epoch: usize,
    pub batch: usize,
    pub keys: Vec<FeatureKey>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_model: TrainedModel,
    pub best_model: TrainedModel,
    pub history: TrainHistory,
    pub memory_log: Vec<MemoryDraw>,
    pub eval_memory: Option<MemoryManifest>,
}

type Loaded = (Arc<DecoderFeatures>, f64);

fn load(source: &dyn FeatureSource, key: &FeatureKey) -> Result<Arc<DecoderFeatures>> {
    source.get(key)?.ok_or_else(|| Error::MissingFeatures {
        signal: key.signal_id.clone(),
        channel: key.channel.to_string(),
    })
}

fn load_all(source: &dyn FeatureSource, examples: &[TrainingExample]) -> Result<Vec<Loaded>> {
    examples
        .iter()
        .map(|e| Ok((load(source, &e.key)?, e.label)))
        .collect()
}

trait Learner: Module {
    /// Adds the gradient of the batch-mean squared error to `grad` and
    /// returns the predictions.
    fn accumulate(&self, batch: &[Loaded], memory: Option<&[Loaded]>, grad: &mut Self) -> Result<Vec<f64>>;

    fn predictor(&self, memory: Option<&[Loaded]>) -> Result<Box<dyn Fn(&DecoderFeatures) -> Result<f64> + '_>>;

    fn into_trained(self) -> TrainedModel;
}

impl Learner for PrimaryModel {
    fn accumulate(&self, batch: &[Loaded], _: Option<&[Loaded]>, grad: &mut Self) -> Result<Vec<f64>> {
        let scale = 2.0 / batch.len() as f64;
        batch
            .iter()
            .map(|(f, label)| {
                let cache = self.forward(f)?;
                self.backward(f, &cache, scale * (cache.output - label), grad);
                Ok(cache.output)
            })
            .collect()
    }

    fn predictor(&self, _: Option<&[Loaded]>) -> Result<Box<dyn Fn(&DecoderFeatures) -> Result<f64> + '_>> {
        Ok(Box::new(move |f| self.predict(f)))
    }

    fn into_trained(self) -> TrainedModel {
        TrainedModel::Primary(self)
    }
}

fn split_memory(memory: Option<&[Loaded]>) -> Result<(Vec<&DecoderFeatures>, Vec<f64>)> {
    let memory = memory.ok_or_else(|| Error::Precondition("secondary model needs an exemplar memory".into()))?;
    Ok((
        memory.iter().map(|(f, _)| f.as_ref()).collect(),
        memory.iter().map(|(_, l)| *l).collect(),
    ))
}

impl Learner for SecondaryModel {
    fn accumulate(&self, batch: &[Loaded], memory: Option<&[Loaded]>, grad: &mut Self) -> Result<Vec<f64>> {
        let (features, labels) = split_memory(memory)?;
        let (pooled, caches) = self.pool_memory(&features, &labels)?;
        let dim = self.dims().pooled_dim();
        let mut d_memory = vec![Array1::<f64>::zeros(dim); pooled.len()];
        let scale = 2.0 / batch.len() as f64;
        let mut out = Vec::with_capacity(batch.len());
        for (f, label) in batch {
            let cache = self.forward(f, &pooled)?;
            let s = cache.out.output;
            let dm = self.backward(f, &cache, &pooled, scale * (s - label), grad);
            for (acc, d) in d_memory.iter_mut().zip(dm) {
                *acc += &d;
            }
            out.push(s);
        }
        for ((f, cache), d) in features.iter().zip(&caches).zip(&d_memory) {
            self.trunk.backward(f, cache, d.view(), &mut grad.trunk);
        }
        Ok(out)
    }

    fn predictor(&self, memory: Option<&[Loaded]>) -> Result<Box<dyn Fn(&DecoderFeatures) -> Result<f64> + '_>> {
        let (features, labels) = split_memory(memory)?;
        let (pooled, _) = self.pool_memory(&features, &labels)?;
        Ok(Box::new(move |f| self.predict(f, &pooled)))
    }

    fn into_trained(self) -> TrainedModel {
        TrainedModel::Secondary(self)
    }
}

/// RMSE on the 0-100 scale of better-ear predictions; records without
/// features for both channels are skipped.
fn validation_rmse_with(
    predict: &dyn Fn(&DecoderFeatures) -> Result<f64>,
    records: &[SignalRecord],
    source: &dyn FeatureSource,
) -> Result<Option<f64>> {
    let mut predicted = Vec::new();
    let mut truth = Vec::new();
    for r in records {
        let mut best = f64::NEG_INFINITY;
        for c in Channel::BOTH {
            if let Some(f) = source.get(&FeatureKey::new(r.signal_id.clone(), c))? {
                best = best.max(predict(&f)?);
            }
        }
        if best.is_finite() {
            predicted.push(100.0 * best);
            truth.push(r.correctness);
        }
    }
    if predicted.is_empty() {
        return Ok(None);
    }
    Ok(Some(mse_loss(&predicted, &truth)?.sqrt()))
}

/// Better-ear validation RMSE of a trained model, with the secondary model's
/// memory given as examples.
pub fn validation_rmse(
    model: &TrainedModel,
    memory: Option<&ExemplarMemory>,
    records: &[SignalRecord],
    source: &dyn FeatureSource,
) -> Result<Option<f64>> {
    let loaded = memory.map(|m| load_all(source, &m.entries)).transpose()?;
    match model {
        TrainedModel::Primary(m) => validation_rmse_with(&*m.predictor(None)?, records, source),
        TrainedModel::Secondary(m) => {
            validation_rmse_with(&*m.predictor(loaded.as_deref())?, records, source)
        }
    }
}

/// Better-ear prediction in [0, 1] for one record.
pub fn predict_better_ear_label(
    model: &TrainedModel,
    memory: Option<&PooledMemory>,
    left: &DecoderFeatures,
    right: &DecoderFeatures,
) -> Result<f64> {
    let one = |f: &DecoderFeatures| match (model, memory) {
        (TrainedModel::Primary(m), _) => m.predict(f),
        (TrainedModel::Secondary(m), Some(mem)) => m.predict(f, mem),
        (TrainedModel::Secondary(_), None) => {
            Err(Error::Precondition("secondary model needs an exemplar memory".into()))
        }
    };
    Ok(one(left)?.max(one(right)?))
}

fn with_context(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite(m) => Error::NonFinite(format!("{m} at epoch {epoch} batch {batch}")),
        other => other,
    }
}

fn run<M: Learner>(
    mut model: M,
    config: &TrainConfig,
    examples: &[TrainingExample],
    validation: ValidationSets<'_>,
    source: &dyn FeatureSource,
    eval_memory: Option<MemoryManifest>,
) -> Result<TrainOutcome> {
    let uses_memory = config.model_kind == ModelKind::Secondary;
    let eval_loaded = eval_memory
        .as_ref()
        .map(|m| load_all(source, &m.exemplars))
        .transpose()?;
    let mut optimizer = AdamW::new(&model, config.learning_rate, config.weight_decay);
    let mut shuffle_rng = stream(config.seed, STREAM_SHUFFLE);
    let mut exemplar_rng = stream(config.seed, STREAM_EXEMPLARS);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = TrainHistory::default();
    let mut memory_log = Vec::new();
    let mut best: Option<(f64, M)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch_no = b + 1;
            let batch_examples: Vec<TrainingExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let batch = load_all(source, &batch_examples)?;
            let memory = if uses_memory {
                let m = sample_exemplars(examples, config.exemplars, &mut exemplar_rng)?;
                memory_log.push(MemoryDraw {
                    epoch,
                    batch: batch_no,
                    keys: m.keys().cloned().collect(),
                });
                Some(load_all(source, &m.entries)?)
            } else {
                None
            };
            let mut grad = model.zeros_like();
            let predictions = model
                .accumulate(&batch, memory.as_deref(), &mut grad)
                .map_err(|e| with_context(e, epoch, batch_no))?;
            let labels: Vec<f64> = batch.iter().map(|(_, l)| *l).collect();
            let loss = mse_loss(&predictions, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {epoch} batch {batch_no}")));
            }
            clip_gradient(
                &mut grad,
                config.clip_norm,
                &format!("epoch {epoch} batch {batch_no}"),
            )?;
            optimizer.step(&mut model, &grad);
            loss_sum += loss * batch.len() as f64;
        }

        let predict = model.predictor(eval_loaded.as_deref())?;
        let record = EpochRecord {
            epoch,
            train_mse: loss_sum / examples.len() as f64,
            val_rmse_disjoint: validation_rmse_with(&*predict, validation.disjoint, source)?,
            val_rmse_random: validation_rmse_with(&*predict, validation.random, source)?,
        };
        drop(predict);
        log::info!(
            "epoch {epoch}: train mse {:.6}, disjoint rmse {:?}, random rmse {:?}",
            record.train_mse,
            record.val_rmse_disjoint,
            record.val_rmse_random
        );
        let score = record.selection_score();
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, model.clone()));
            history.best_epoch = epoch;
        }
        history.records.push(record);
    }

    let (_, best_model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        final_model: model.into_trained(),
        best_model: best_model.into_trained(),
        history,
        memory_log,
        eval_memory,
    })
}

/// Trains a fresh model. Initialisation, batch order and exemplar draws
/// depend only on `config.seed`.
pub fn train(
    config: &TrainConfig,
    examples: &[TrainingExample],
    validation: ValidationSets<'_>,
    source: &dyn FeatureSource,
) -> Result<TrainOutcome> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Precondition("no training examples".into()));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.model_kind {
        ModelKind::Primary => run(
            PrimaryModel::init(config.dims, &mut init_rng),
            config,
            examples,
            validation,
            source,
            None,
        ),
        ModelKind::Secondary => {
            if examples.len() < config.exemplars {
                return Err(Error::Precondition(format!(
                    "{} training examples cannot supply {} exemplars",
                    examples.len(),
                    config.exemplars
                )));
            }
            let seed = config.seed.wrapping_add(EVAL_MEMORY_OFFSET);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let memory = sample_exemplars(examples, config.exemplars, &mut rng)?;
            let manifest = MemoryManifest {
                seed,
                exemplars: memory.entries,
            };
            run(
                SecondaryModel::init(config.dims, &mut init_rng),
                config,
                examples,
                validation,
                source,
                Some(manifest),
            )
        }
    }
}
