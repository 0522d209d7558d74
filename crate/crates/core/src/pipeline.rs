//! The `extract`, `train`, `evaluate` and `report` commands.
//!
//! Every command writes `<out>/<command>_config.json` before doing any work,
//! so a run can be repeated from its snapshot.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_manifest, prepare_waveform, Channel, DatasetSplit, SignalRecord};
use crate::error::{Error, Result};
use crate::eval::{
    build_report, layer_weight_report, predict_records, read_predictions_csv, write_plot_data,
    write_predictions_csv, write_report_json, EvaluationReport, PredictionRecord, Predictors,
};
use crate::exemplar::{PooledMemory, SecondaryModel, DEFAULT_EXEMPLARS};
use crate::features::{CachedFeatures, FeatureBackend, FeatureCache, FeatureSource};
use crate::model::{load_checkpoint, save_checkpoint, CheckpointMeta, ModelDims, ModelKind, TrainedModel};
use crate::training::{make_training_examples, train, TrainConfig, ValidationSets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSelection {
    One(u8),
    All,
}

impl SplitSelection {
    pub fn ids(self) -> Vec<u8> {
        match self {
            SplitSelection::One(s) => vec![s],
            SplitSelection::All => vec![1, 2, 3],
        }
    }
}

impl fmt::Display for SplitSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSelection::One(s) => write!(f, "{s}"),
            SplitSelection::All => f.write_str("all"),
        }
    }
}

impl FromStr for SplitSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(SplitSelection::All),
            "1" | "2" | "3" => Ok(SplitSelection::One(s.parse().expect("digit"))),
            _ => Err(Error::InvalidArgument(format!("split `{s}`: expected 1, 2, 3 or all"))),
        }
    }
}

/// Settings shared by all commands. Unset hyperparameters take the model's
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub cache_dir: PathBuf,
    pub backend: String,
    pub split: SplitSelection,
    pub out: PathBuf,
    pub seed: u64,
    pub model: ModelKind,
    pub final_run: bool,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub exemplars: Option<usize>,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, cache_dir: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            cache_dir: cache_dir.into(),
            backend: "mock:0".into(),
            split: SplitSelection::One(1),
            out: out.into(),
            seed: 0,
            model: ModelKind::Primary,
            final_run: false,
            epochs: None,
            batch_size: None,
            learning_rate: None,
            weight_decay: None,
            exemplars: None,
            workers: 1,
        }
    }

    pub fn backend(&self) -> Result<FeatureBackend> {
        self.backend.parse()
    }

    /// Defaults for `self.model` with any overrides applied.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let (d, l) = self.backend()?.feature_shape();
        let mut c = TrainConfig::defaults(self.model);
        c.seed = self.seed;
        c.dims = ModelDims::for_features(d, l);
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.weight_decay {
            c.weight_decay = v;
        }
        c.exemplars = self.exemplars.unwrap_or(DEFAULT_EXEMPLARS);
        c.validate()?;
        Ok(c)
    }

    fn source(&self) -> Result<CachedFeatures> {
        Ok(CachedFeatures::new(
            FeatureCache::new(&self.cache_dir),
            self.backend()?.identity(),
        ))
    }

    /// `<out>/split-<n>/<model>`.
    pub fn model_dir(&self, split: u8, kind: ModelKind) -> PathBuf {
        self.out.join(format!("split-{split}")).join(kind.as_str())
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn snapshot<T: Serialize>(out: &Path, command: &str, extra: &T, run: &RunConfig) -> Result<()> {
    create_dir(out)?;
    #[derive(Serialize)]
    struct Snapshot<'a, T> {
        command: &'a str,
        run: &'a RunConfig,
        options: &'a T,
    }
    write_json(
        &out.join(format!("{command}_config.json")),
        &Snapshot {
            command,
            run,
            options: extra,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub records: usize,
    /// Cache entries written by this run.
    pub extracted: usize,
    /// Cache entries that already existed.
    pub reused: usize,
    pub min_words: Option<usize>,
    pub max_words: Option<usize>,
    pub mean_words: Option<f64>,
}

/// Fills the cache for both channels of every manifest record.
pub fn cmd_extract(run: &RunConfig) -> Result<ExtractSummary> {
    snapshot(&run.out, "extract", &(), run)?;
    let records = load_manifest(&run.manifest)?;
    let backend = run.backend()?;
    let identity = backend.identity();
    let cache = FeatureCache::new(&run.cache_dir);
    let jobs: Vec<(&SignalRecord, Channel)> = records
        .iter()
        .flat_map(|r| Channel::BOTH.map(|c| (r, c)))
        .collect();
    let missing: Vec<&(&SignalRecord, Channel)> = jobs
        .iter()
        .filter(|(r, c)| !cache.contains(&identity, &r.signal_id, *c))
        .collect();
    let reused = jobs.len() - missing.len();
    if let (Some(_), FeatureBackend::Pretrained(p)) = (missing.first(), &backend) {
        return Err(p.unavailable());
    }
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let words: Vec<usize> = pool.install(|| {
        missing
            .par_iter()
            .map(|(r, c)| {
                let waveform = prepare_waveform(r, *c)?;
                let features = backend.extract(&waveform)?;
                cache.store(&identity, &r.signal_id, *c, &features)?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n % 100 == 0 {
                    log::info!("extracted {n}/{}", missing.len());
                }
                Ok(features.word_count())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = ExtractSummary {
        records: records.len(),
        extracted: words.len(),
        reused,
        min_words: words.iter().copied().min(),
        max_words: words.iter().copied().max(),
        mean_words: (!words.is_empty())
            .then(|| words.iter().sum::<usize>() as f64 / words.len() as f64),
    };
    write_json(&run.out.join("extract_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitTrainSummary {
    pub split: u8,
    pub model_dir: PathBuf,
    pub train_examples: usize,
    pub skipped_records: usize,
    pub best_epoch: usize,
    pub final_train_mse: f64,
    pub best_val_rmse_disjoint: Option<f64>,
    pub held_out_listeners: Vec<String>,
    pub held_out_systems: Vec<String>,
}

/// Trains `run.model` on every selected split of the training manifest.
pub fn cmd_train(run: &RunConfig) -> Result<Vec<SplitTrainSummary>> {
    let config = run.train_config()?;
    snapshot(&run.out, "train", &config.to_kv(), run)?;
    let records = load_manifest(&run.manifest)?;
    let source = run.source()?;
    let identity = run.backend()?.identity();
    let mut summaries = Vec::new();
    for split_id in run.split.ids() {
        let split = DatasetSplit::build(&records, &[], split_id, run.seed, run.final_run)?;
        let set = make_training_examples(&split.train, &source);
        if set.examples.is_empty() {
            return Err(Error::Precondition(format!(
                "no cached features for the training records of split {split_id} under {}; \
                 run `extract` with the same --cache and --backend first",
                source.cache.path_for(&identity, "", Channel::Left).parent().expect("has parent").display()
            )));
        }
        let outcome = train(
            &config,
            &set.examples,
            ValidationSets {
                disjoint: &split.disjoint_validation,
                random: &split.random_validation,
            },
            &source,
        )?;
        let dir = run.model_dir(split_id, config.model_kind);
        create_dir(&dir)?;
        let meta = CheckpointMeta {
            model_kind: config.model_kind,
            backend_identity: identity.clone(),
            config_hash: config.hash(),
            dims: config.dims,
            eval_memory: outcome.eval_memory.clone(),
        };
        save_trained(&dir.join("checkpoint_best.safetensors"), &outcome.best_model, &meta)?;
        save_trained(&dir.join("checkpoint_final.safetensors"), &outcome.final_model, &meta)?;
        fs::write(dir.join("history.csv"), outcome.history.to_csv()).map_err(|e| Error::io(&dir, e))?;
        fs::write(dir.join("train_config.txt"), config.to_kv()).map_err(|e| Error::io(&dir, e))?;
        if let Some(m) = &outcome.eval_memory {
            write_json(&dir.join("eval_memory.json"), m)?;
            let mut log = String::from("epoch,batch,exemplars\n");
            for d in &outcome.memory_log {
                let keys: Vec<String> = d.keys.iter().map(|k| format!("{}.{}", k.signal_id, k.channel)).collect();
                log.push_str(&format!("{},{},{}\n", d.epoch, d.batch, keys.join(" ")));
            }
            fs::write(dir.join("memory_log.csv"), log).map_err(|e| Error::io(&dir, e))?;
        }
        let best = &outcome.history.records[outcome.history.best_epoch - 1];
        let summary = SplitTrainSummary {
            split: split_id,
            model_dir: dir.clone(),
            train_examples: set.examples.len(),
            skipped_records: set.skipped.len(),
            best_epoch: outcome.history.best_epoch,
            final_train_mse: outcome.history.records.last().expect("epochs >= 1").train_mse,
            best_val_rmse_disjoint: best.val_rmse_disjoint,
            held_out_listeners: split.held_out_listeners.iter().cloned().collect(),
            held_out_systems: split.held_out_systems.iter().cloned().collect(),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        summaries.push(summary);
    }
    Ok(summaries)
}

fn save_trained(path: &Path, model: &TrainedModel, meta: &CheckpointMeta) -> Result<()> {
    match model {
        TrainedModel::Primary(m) => save_checkpoint(path, m, meta),
        TrainedModel::Secondary(m) => save_checkpoint(path, m, meta),
    }
}

/// Checkpoints for `evaluate`. Paths left unset are looked up under
/// `models_dir` as written by `train`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    pub models_dir: Option<PathBuf>,
    pub primary: Option<PathBuf>,
    pub secondary: Option<PathBuf>,
    /// Evaluate only the model whose checkpoint is available.
    pub single_model: Option<ModelKind>,
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub predictions: Vec<PredictionRecord>,
    pub report: EvaluationReport,
    pub dir: PathBuf,
}

fn locate(run: &RunConfig, opts: &EvaluateOptions, split: u8, kind: ModelKind) -> Result<PathBuf> {
    let explicit = match kind {
        ModelKind::Primary => &opts.primary,
        ModelKind::Secondary => &opts.secondary,
    };
    if let Some(p) = explicit {
        if run.split == SplitSelection::All {
            return Err(Error::InvalidArgument(
                "explicit checkpoints need a single --split; use --models for all splits".into(),
            ));
        }
        return Ok(p.clone());
    }
    let root = opts.models_dir.clone().unwrap_or_else(|| run.out.clone());
    Ok(root
        .join(format!("split-{split}"))
        .join(kind.as_str())
        .join("checkpoint_best.safetensors"))
}

fn load_for(path: &Path, kind: ModelKind, identity: &str) -> Result<(TrainedModel, CheckpointMeta)> {
    let (model, meta) = load_checkpoint(path)?;
    if meta.model_kind != kind {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            message: format!("holds a {} model, expected {kind}", meta.model_kind),
        });
    }
    if meta.backend_identity != identity {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            message: format!(
                "trained on features from `{}` but evaluation uses `{identity}`",
                meta.backend_identity
            ),
        });
    }
    Ok((model, meta))
}

fn pooled_memory(
    model: &SecondaryModel,
    meta: &CheckpointMeta,
    source: &dyn FeatureSource,
    path: &Path,
) -> Result<PooledMemory> {
    let manifest = meta.eval_memory.as_ref().ok_or_else(|| Error::Checkpoint {
        path: path.to_path_buf(),
        message: "secondary checkpoint has no evaluation memory".into(),
    })?;
    let memory = manifest.memory()?;
    let features = memory
        .keys()
        .map(|k| {
            source.get(k)?.ok_or_else(|| Error::MissingFeatures {
                signal: k.signal_id.clone(),
                channel: k.channel.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = features.iter().map(|f| f.as_ref()).collect();
    Ok(model.pool_memory(&refs, &memory.labels())?.0)
}

/// Predicts the evaluation manifest with the trained ensemble and writes
/// `<out>/evaluation/{predictions.csv, report.json, plots/}`.
pub fn cmd_evaluate(run: &RunConfig, opts: &EvaluateOptions) -> Result<EvaluateOutcome> {
    snapshot(&run.out, "evaluate", opts, run)?;
    let records = load_manifest(&run.manifest)?;
    let source = run.source()?;
    let identity = run.backend()?.identity();
    let kinds: Vec<ModelKind> = match opts.single_model {
        Some(k) => vec![k],
        None => vec![ModelKind::Primary, ModelKind::Secondary],
    };
    let mut predictions = Vec::new();
    let mut weights = BTreeMap::new();
    for split in run.split.ids() {
        let subset: Vec<SignalRecord> = records.iter().filter(|r| r.split_id == split).cloned().collect();
        if subset.is_empty() {
            log::warn!("no evaluation records for split {split}");
            continue;
        }
        let mut primary = None;
        let mut secondary = None;
        for &kind in &kinds {
            let path = locate(run, opts, split, kind)?;
            let (model, meta) = load_for(&path, kind, &identity)?;
            let label = match run.split {
                SplitSelection::All => format!("{kind}_split{split}"),
                SplitSelection::One(_) => kind.to_string(),
            };
            weights.insert(label, layer_weight_report(&model));
            match model {
                TrainedModel::Primary(m) => primary = Some(m),
                TrainedModel::Secondary(m) => {
                    let mem = pooled_memory(&m, &meta, &source, &path)?;
                    secondary = Some((m, mem));
                }
            }
        }
        let predictors = Predictors {
            primary: primary.as_ref(),
            secondary: secondary.as_ref().map(|(m, mem)| (m, mem)),
        };
        predictions.extend(predict_records(&subset, &source, predictors, run.workers)?);
    }
    let report = build_report(&predictions, weights)?;
    let dir = run.out.join("evaluation");
    create_dir(&dir)?;
    write_predictions_csv(&dir.join("predictions.csv"), &predictions)?;
    write_report_json(&dir.join("report.json"), &report)?;
    write_plot_data(&dir.join("plots"), &predictions, &report)?;
    Ok(EvaluateOutcome {
        predictions,
        report,
        dir,
    })
}

/// Rebuilds `report.json` and plot data from an existing predictions CSV.
/// Layer weights are taken from any checkpoints given.
pub fn cmd_report(
    run: &RunConfig,
    predictions: &Path,
    checkpoints: &[PathBuf],
) -> Result<EvaluationReport> {
    snapshot(&run.out, "report", &(predictions, checkpoints), run)?;
    let records = read_predictions_csv(predictions)?;
    let mut weights = BTreeMap::new();
    for path in checkpoints {
        let (model, meta) = load_checkpoint(path)?;
        let mut name = meta.model_kind.to_string();
        let mut n = 1;
        while weights.contains_key(&name) {
            n += 1;
            name = format!("{}_{n}", meta.model_kind);
        }
        weights.insert(name, layer_weight_report(&model));
    }
    let report = build_report(&records, weights)?;
    create_dir(&run.out)?;
    write_report_json(&run.out.join("report.json"), &report)?;
    write_plot_data(&run.out.join("plots"), &records, &report)?;
    Ok(report)
}
