//! Frozen decoder-layer features: the Mel front end, feature backends and the
//! on-disk cache.

mod backend;
mod cache;
mod mel;
mod tensor;

pub use backend::{FeatureBackend, MockBackend, PlantedSignal, PretrainedBackend};
pub use cache::{
    read_features, write_features, CachedFeatures, FeatureCache, FeatureKey, FeatureSource,
    InMemoryFeatures,
};
pub use mel::{
    log_mel, mel_filterbank, normalize_log_mel, MelSpectrogram, HOP_LENGTH, LOG_FLOOR, N_FFT,
    N_FRAMES, N_MELS,
};
pub use tensor::{DecoderFeatures, FEATURE_DIM, LAYER_COUNT};
