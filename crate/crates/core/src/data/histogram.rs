use serde::Serialize;

use super::SignalRecord;
use crate::error::{Error, Result};

/// Number of correctness bins of `width` covering [0, 100].
pub fn num_bins(width: f64) -> usize {
    (100.0 / width).ceil() as usize
}

/// Bins are right-open except the last, which also takes 100.
pub fn bin_index(correctness: f64, width: f64) -> usize {
    ((correctness / width).floor().max(0.0) as usize).min(num_bins(width) - 1)
}

pub fn bin_center(index: usize, width: f64) -> f64 {
    (index as f64 + 0.5) * width
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

pub fn correctness_histogram(records: &[SignalRecord], bin_width: f64) -> Result<Histogram> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty record set".into()));
    }
    if !(bin_width > 0.0 && bin_width <= 100.0) {
        return Err(Error::InvalidArgument(format!("bin width {bin_width}")));
    }
    let n = num_bins(bin_width);
    let mut counts = vec![0usize; n];
    for r in records {
        counts[bin_index(r.correctness, bin_width)] += 1;
    }
    let total = records.len() as f64;
    Ok(Histogram {
        centers: (0..n).map(|i| bin_center(i, bin_width)).collect(),
        proportions: counts.iter().map(|&c| c as f64 / total).collect(),
        counts,
    })
}
