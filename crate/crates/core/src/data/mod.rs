//! Manifest ingestion, audio preparation and train/validation splitting.

mod audio;
mod histogram;
mod manifest;
mod split;

pub use audio::{
    prepare_samples, prepare_waveform, read_stereo_wav, resample, write_stereo_wav, Channel,
    Waveform, TARGET_LEN, TARGET_RATE,
};
pub use histogram::{bin_center, bin_index, correctness_histogram, num_bins, Histogram};
pub use manifest::{load_manifest, parse_manifest, save_manifest, SignalRecord};
pub use split::{
    build_disjoint_validation, build_random_validation, DatasetSplit, DisjointSplit, RandomSplit,
};
