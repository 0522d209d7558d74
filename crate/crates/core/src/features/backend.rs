use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::{DecoderFeatures, FEATURE_DIM, LAYER_COUNT};
use crate::data::Waveform;
use crate::error::{Error, Result};

/// Source of decoder-layer features. Both variants are stateless: the same
/// waveform always maps to the same tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureBackend {
    Pretrained(PretrainedBackend),
    Mock(MockBackend),
}

impl FeatureBackend {
    pub fn identity(&self) -> String {
        match self {
            FeatureBackend::Pretrained(b) => b.identity(),
            FeatureBackend::Mock(b) => b.identity(),
        }
    }

    pub fn extract(&self, waveform: &Waveform) -> Result<DecoderFeatures> {
        match self {
            FeatureBackend::Pretrained(b) => b.extract(waveform),
            FeatureBackend::Mock(b) => b.extract(waveform),
        }
    }

    /// `(feature_dim, layers)` of the tensors this backend produces.
    pub fn feature_shape(&self) -> (usize, usize) {
        match self {
            FeatureBackend::Mock(m) => (m.feature_dim, m.layers),
            FeatureBackend::Pretrained(_) => (FEATURE_DIM, LAYER_COUNT),
        }
    }

    pub fn as_mock(&self) -> Option<&MockBackend> {
        match self {
            FeatureBackend::Mock(m) => Some(m),
            FeatureBackend::Pretrained(_) => None,
        }
    }
}

impl fmt::Display for FeatureBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.identity())
    }
}

/// Parses `mock:<seed>[:planted][:w<min>-<max>][:d<dim>x<layers>]` or
/// `pretrained_asr:<model>`. Mock identities parse back to the same backend.
impl FromStr for FeatureBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "mock" => {
                let mut parts = rest.split(':').filter(|p| !p.is_empty());
                let seed = match parts.next() {
                    Some(p) => p.parse().map_err(|_| {
                        Error::InvalidArgument(format!("mock seed `{p}` is not an integer"))
                    })?,
                    None => 0,
                };
                let mut backend = MockBackend::new(seed);
                let mut planted = false;
                let bad = |o: &str| Error::InvalidArgument(format!("unknown mock backend option `{o}`"));
                for flag in parts {
                    if flag == "planted" {
                        planted = true;
                    } else if let Some((a, b)) = flag.strip_prefix('w').and_then(|r| r.split_once('-')) {
                        let (a, b) = (a.parse().map_err(|_| bad(flag))?, b.parse().map_err(|_| bad(flag))?);
                        if a == 0 || a > b {
                            return Err(bad(flag));
                        }
                        backend = backend.with_word_range(a, b);
                    } else if let Some((d, l)) = flag.strip_prefix('d').and_then(|r| r.split_once('x')) {
                        let (d, l): (usize, usize) = (d.parse().map_err(|_| bad(flag))?, l.parse().map_err(|_| bad(flag))?);
                        if d == 0 || l == 0 {
                            return Err(bad(flag));
                        }
                        backend = backend.with_dims(d, l);
                    } else {
                        return Err(bad(flag));
                    }
                }
                if planted {
                    backend = backend.with_planted_signal();
                }
                Ok(FeatureBackend::Mock(backend))
            }
            "pretrained_asr" | "pretrained" if !rest.is_empty() => {
                Ok(FeatureBackend::Pretrained(PretrainedBackend::new(rest)))
            }
            _ => Err(Error::InvalidArgument(format!(
                "backend `{s}`: expected `mock:<seed>[:planted]` or `pretrained_asr:<model>`"
            ))),
        }
    }
}

/// Frozen pretrained ASR model run with greedy decoding.
///
/// This build carries no neural runtime for the ASR model, so extraction
/// reports the backend as unavailable. Features produced elsewhere can be
/// placed in the feature cache under this backend's identity and are then
/// used exactly like extracted ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PretrainedBackend {
    pub model: String,
}

impl PretrainedBackend {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
        }
    }

    pub fn identity(&self) -> String {
        format!("pretrained_asr:{}:greedy", self.model)
    }

    pub fn extract(&self, _waveform: &Waveform) -> Result<DecoderFeatures> {
        Err(self.unavailable())
    }

    pub fn unavailable(&self) -> Error {
        Error::BackendUnavailable {
            identity: self.identity(),
            hint: "no ASR runtime is compiled into this build; use `--backend mock:<seed>` \
                   or populate the feature cache for this backend identity"
                .into(),
        }
    }
}

/// Deterministic stand-in for the ASR decoder.
///
/// Tensors are Gaussian noise seeded by the backend seed and the waveform
/// content, with `W` uniform in `word_range`. With a [`PlantedSignal`] each
/// utterance also carries a latent scalar along a fixed direction, and
/// [`MockBackend::planted_label`] recovers a label from it.
#[derive(Debug, Clone, PartialEq)]
pub struct MockBackend {
    pub seed: u64,
    pub word_range: (usize, usize),
    pub feature_dim: usize,
    pub layers: usize,
    pub planted: Option<PlantedSignal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSignal {
    /// Unit vector in feature space.
    pub direction: Vec<f32>,
    /// Per-layer strength of the planted component.
    pub layer_gain: Vec<f32>,
    pub amplitude: f32,
    /// Logistic slope mapping the recovered latent to a label.
    pub slope: f64,
}

impl PlantedSignal {
    fn generate(seed: u64, feature_dim: usize, layers: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_D1EC_7105_u64);
        let mut direction: Vec<f32> = (0..feature_dim)
            .map(|_| rng.sample::<f32, _>(StandardNormal))
            .collect();
        let norm = direction.iter().map(|v| v * v).sum::<f32>().sqrt();
        direction.iter_mut().for_each(|v| *v /= norm);
        // Strongest around the middle-upper layers.
        let centre = 0.6 * layers as f32 + 0.3;
        let layer_gain = (1..=layers)
            .map(|k| (-((k as f32 - centre).powi(2)) / 8.0).exp())
            .collect();
        Self {
            direction,
            layer_gain,
            amplitude: 8.0,
            slope: 1.5,
        }
    }
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            word_range: (4, 24),
            feature_dim: FEATURE_DIM,
            layers: LAYER_COUNT,
            planted: None,
        }
    }

    pub fn with_planted_signal(mut self) -> Self {
        self.planted = Some(PlantedSignal::generate(
            self.seed,
            self.feature_dim,
            self.layers,
        ));
        self
    }

    pub fn with_word_range(mut self, min: usize, max: usize) -> Self {
        assert!(1 <= min && min <= max, "word range must satisfy 1 <= min <= max");
        self.word_range = (min, max);
        self
    }

    /// Changes the tensor shape; regenerates the planted direction if present.
    pub fn with_dims(mut self, feature_dim: usize, layers: usize) -> Self {
        self.feature_dim = feature_dim;
        self.layers = layers;
        if self.planted.is_some() {
            self.planted = Some(PlantedSignal::generate(self.seed, feature_dim, layers));
        }
        self
    }

    pub fn identity(&self) -> String {
        let mut id = format!("mock:{}", self.seed);
        if self.planted.is_some() {
            id.push_str(":planted");
        }
        if self.word_range != (4, 24) {
            id.push_str(&format!(":w{}-{}", self.word_range.0, self.word_range.1));
        }
        if (self.feature_dim, self.layers) != (FEATURE_DIM, LAYER_COUNT) {
            id.push_str(&format!(":d{}x{}", self.feature_dim, self.layers));
        }
        id
    }

    fn content_rng(&self, samples: &[f32]) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(b"mock-decoder-features");
        hasher.update(self.identity().as_bytes());
        for s in samples {
            hasher.update(s.to_le_bytes());
        }
        ChaCha8Rng::from_seed(hasher.finalize().into())
    }

    pub fn extract(&self, waveform: &Waveform) -> Result<DecoderFeatures> {
        if !waveform.is_prepared() {
            return Err(Error::Precondition(
                "feature extraction needs a prepared 16 kHz, 30 s waveform".into(),
            ));
        }
        Ok(self.features_for_samples(&waveform.samples))
    }

    /// Features for an arbitrary sample buffer; `extract` without the
    /// preparation check.
    pub fn features_for_samples(&self, samples: &[f32]) -> DecoderFeatures {
        let mut rng = self.content_rng(samples);
        let words = rng.random_range(self.word_range.0..=self.word_range.1);
        let mut values = Array3::<f32>::zeros((words, self.feature_dim, self.layers));
        values
            .iter_mut()
            .for_each(|v| *v = rng.sample::<f32, _>(StandardNormal));
        if let Some(planted) = &self.planted {
            let latent: f32 = rng.sample(StandardNormal);
            for mut word in values.outer_iter_mut() {
                for (c, mut row) in word.outer_iter_mut().enumerate() {
                    let along = planted.amplitude * latent * planted.direction[c];
                    for (v, g) in row.iter_mut().zip(&planted.layer_gain) {
                        *v += along * g;
                    }
                }
            }
        }
        DecoderFeatures::new(values).expect("mock features are finite and non-empty")
    }

    /// Label in (0, 1) read off the planted direction, or `None` without a
    /// planted signal.
    pub fn planted_label(&self, features: &DecoderFeatures) -> Option<f64> {
        let planted = self.planted.as_ref()?;
        let mean = features.values().mapv(f64::from).mean_axis(Axis(0))?;
        let mut score = 0.0;
        let mut gain_sq = 0.0;
        for (k, &g) in planted.layer_gain.iter().enumerate() {
            let proj: f64 = mean
                .column(k)
                .iter()
                .zip(&planted.direction)
                .map(|(m, &d)| m * d as f64)
                .sum();
            score += g as f64 * proj;
            gain_sq += (g as f64).powi(2);
        }
        let latent = score / (gain_sq * planted.amplitude as f64);
        Some(1.0 / (1.0 + (-planted.slope * latent).exp()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Channel, TARGET_LEN, TARGET_RATE};

    fn wave(seed: u32) -> Waveform {
        Waveform {
            samples: (0..TARGET_LEN)
                .map(|i| ((i as u32).wrapping_mul(2654435761).wrapping_add(seed) % 1000) as f32 * 1e-3)
                .collect(),
            sample_rate: TARGET_RATE,
            channel: Channel::Left,
        }
    }

    #[test]
    fn mock_is_deterministic_and_shaped() {
        let backend = MockBackend::new(7);
        let a = backend.extract(&wave(1)).unwrap();
        let b = backend.extract(&wave(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.feature_dim(), 768);
        assert_eq!(a.layer_count(), 12);
        assert!((4..=24).contains(&a.word_count()));
        assert_ne!(a, backend.extract(&wave(2)).unwrap());
        assert_ne!(a, MockBackend::new(8).extract(&wave(1)).unwrap());
    }

    #[test]
    fn word_counts_cover_configured_range() {
        let backend = MockBackend::new(3).with_word_range(2, 4).with_dims(8, 3);
        let mut seen = [false; 5];
        for s in 0..60 {
            let f = backend.features_for_samples(&[s as f32]);
            assert!((2..=4).contains(&f.word_count()));
            seen[f.word_count()] = true;
        }
        assert!(seen[2] && seen[3] && seen[4]);
    }

    #[test]
    fn pretrained_backend_reports_unavailable() {
        let backend: FeatureBackend = "pretrained_asr:openai/whisper-small".parse().unwrap();
        let err = backend.extract(&wave(0)).unwrap_err();
        assert!(matches!(err, Error::BackendUnavailable { .. }));
        assert!(err.to_string().contains("mock"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn backend_strings() {
        let b: FeatureBackend = "mock:42:planted".parse().unwrap();
        assert_eq!(b.identity(), "mock:42:planted");
        assert!(b.as_mock().unwrap().planted.is_some());
        assert_eq!("mock".parse::<FeatureBackend>().unwrap().identity(), "mock:0");
        assert!("mock:x".parse::<FeatureBackend>().is_err());
        assert!("onnx:foo".parse::<FeatureBackend>().is_err());
        assert!("mock:1:w5-2".parse::<FeatureBackend>().is_err());
        let custom = MockBackend::new(9).with_word_range(2, 5).with_dims(8, 4).with_planted_signal();
        let parsed: FeatureBackend = custom.identity().parse().unwrap();
        assert_eq!(parsed.as_mock(), Some(&custom));
    }

    #[test]
    fn planted_label_tracks_latent() {
        let backend = MockBackend::new(5).with_planted_signal();
        let labels: Vec<f64> = (0..40)
            .map(|s| {
                let f = backend.features_for_samples(&[s as f32]);
                backend.planted_label(&f).unwrap()
            })
            .collect();
        assert!(labels.iter().all(|&l| l > 0.0 && l < 1.0));
        let mean = labels.iter().sum::<f64>() / labels.len() as f64;
        let var = labels.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / labels.len() as f64;
        // The latent spreads labels well beyond the noise floor.
        assert!(var.sqrt() > 0.1, "label sd {}", var.sqrt());
        assert!(MockBackend::new(5)
            .planted_label(&backend.features_for_samples(&[0.0]))
            .is_none());
    }
}
