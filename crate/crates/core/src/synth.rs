//! Synthetic corpora for tests, examples and smoke runs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{prepare_samples, save_manifest, write_stereo_wav, Channel, SignalRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureKey, InMemoryFeatures, MockBackend};
use crate::training::TrainingExample;

/// `n` single-channel examples whose labels are the backend's planted
/// labels. Keys are `"{prefix}{i}"` on the left channel.
pub fn planted_examples(
    backend: &MockBackend,
    prefix: &str,
    n: usize,
) -> Result<(InMemoryFeatures, Vec<TrainingExample>)> {
    if backend.planted.is_none() {
        return Err(Error::InvalidArgument("backend has no planted signal".into()));
    }
    let mut source = InMemoryFeatures::new();
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let key = FeatureKey::new(format!("{prefix}{i}"), Channel::Left);
        let features = backend.features_for_samples(&[i as f32, prefix.len() as f32]);
        let label = backend.planted_label(&features).expect("planted backend");
        source.insert(key.clone(), features);
        examples.push(TrainingExample { key, label });
    }
    Ok((source, examples))
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub train_records: usize,
    pub eval_records: usize,
    /// Distinct listeners and systems in each pool.
    pub listeners: usize,
    pub systems: usize,
    pub sample_rate: u32,
    pub seconds: f32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            train_records: 144,
            eval_records: 48,
            listeners: 6,
            systems: 6,
            sample_rate: 32_000,
            seconds: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train_manifest: PathBuf,
    pub eval_manifest: PathBuf,
    pub train: Vec<SignalRecord>,
    pub eval: Vec<SignalRecord>,
}

/// Writes stereo WAVs and train/eval manifests under `dir`.
///
/// Training and evaluation pools use disjoint listener and system IDs. With
/// a planted `labeller`, correctness is 100 times the better-ear planted
/// label of the mock features; otherwise it is uniform on [0, 100].
pub fn write_corpus(dir: &Path, spec: &SynthSpec, labeller: Option<&MockBackend>) -> Result<SynthCorpus> {
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = (spec.sample_rate as f32 * spec.seconds) as usize;
    let mut build = |pool: &str, count: usize, offset: usize| -> Result<Vec<SignalRecord>> {
        let mut records = Vec::with_capacity(count);
        for i in 0..count {
            let j = i / 3;
            let listener = format!("L{pool}{:02}", j % spec.listeners);
            let system = format!("E{pool}{:02}", (j / spec.listeners + j) % spec.systems);
            let signal_id = format!("S{:05}_{listener}_{system}", offset + i);
            let left: Vec<f32> = (0..len).map(|_| rng.random_range(-0.3..0.3)).collect();
            let right: Vec<f32> = (0..len).map(|_| rng.random_range(-0.3..0.3)).collect();
            let path = audio_dir.join(format!("{signal_id}.wav"));
            write_stereo_wav(&path, &left, &right, spec.sample_rate)?;
            let correctness = match labeller {
                Some(b) => {
                    let label = |s: &[f32], c: Channel| {
                        let w = prepare_samples(s, spec.sample_rate, c);
                        b.planted_label(&b.features_for_samples(&w.samples))
                            .expect("planted backend")
                    };
                    (100.0 * label(&left, Channel::Left).max(label(&right, Channel::Right)))
                        .clamp(0.0, 100.0)
                }
                None => (rng.random_range(0.0..100.0f64) * 100.0).round() / 100.0,
            };
            let audiogram: Vec<f64> = (0..8).map(|k| 10.0 + 5.0 * k as f64).collect();
            records.push(SignalRecord {
                signal_id,
                audio_path: path.to_string_lossy().into_owned(),
                listener_id: listener,
                system_id: system,
                correctness,
                split_id: (i % 3) as u8 + 1,
                audiogram_left: audiogram.clone(),
                audiogram_right: audiogram,
            });
        }
        Ok(records)
    };
    let train = build("T", spec.train_records, 0)?;
    let eval = build("V", spec.eval_records, spec.train_records)?;
    let train_manifest = dir.join("train.json");
    let eval_manifest = dir.join("eval.json");
    save_manifest(&train_manifest, &train)?;
    save_manifest(&eval_manifest, &eval)?;
    Ok(SynthCorpus {
        train_manifest,
        eval_manifest,
        train,
        eval,
    })
}
