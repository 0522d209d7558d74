use serde::{Deserialize, Serialize};

use crate::data::{bin_center, bin_index, num_bins};
use crate::error::{Error, Result};

/// Root mean squared error on whatever scale the inputs use.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "rmse needs equal non-empty lengths, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let sum: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum / predicted.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRmse {
    pub center: f64,
    pub count: usize,
    pub rmse: f64,
}

/// RMSE within each true-correctness bin; empty bins are omitted.
pub fn rmse_by_bin(predicted: &[f64], truth: &[f64], bin_width: f64) -> Result<Vec<BinRmse>> {
    rmse(predicted, truth)?;
    let mut sums = vec![(0usize, 0.0f64); num_bins(bin_width)];
    for (p, t) in predicted.iter().zip(truth) {
        let b = &mut sums[bin_index(*t, bin_width)];
        b.0 += 1;
        b.1 += (p - t) * (p - t);
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(i, (n, s))| BinRmse {
            center: bin_center(i, bin_width),
            count: n,
            rmse: (s / n as f64).sqrt(),
        })
        .collect())
}

/// Least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope: f64,
    pub intercept: f64,
}

/// `None` with fewer than two distinct `x` values.
pub fn fit_trend(points: &[(f64, f64)]) -> Option<Trend> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(Trend {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemStats {
    pub system: String,
    pub count: usize,
    pub mean_true: f64,
    pub mean_predicted: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    /// Sorted by system ID.
    pub systems: Vec<SystemStats>,
    /// Per-system RMSE against mean true correctness.
    pub trend: Option<Trend>,
}

/// `rows` are `(system, predicted, true)` on the 0-100 scale.
pub fn per_system_report(rows: &[(&str, f64, f64)]) -> Result<SystemReport> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("per-system report needs records".into()));
    }
    let mut names: Vec<&str> = rows.iter().map(|r| r.0).collect();
    names.sort_unstable();
    names.dedup();
    let systems: Vec<SystemStats> = names
        .into_iter()
        .map(|name| {
            let (p, t): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.0 == name).map(|r| (r.1, r.2)).unzip();
            let n = p.len() as f64;
            SystemStats {
                system: name.to_string(),
                count: p.len(),
                mean_true: t.iter().sum::<f64>() / n,
                mean_predicted: p.iter().sum::<f64>() / n,
                rmse: rmse(&p, &t).expect("non-empty group"),
            }
        })
        .collect();
    let trend = if systems.len() >= 2 {
        fit_trend(&systems.iter().map(|s| (s.mean_true, s.rmse)).collect::<Vec<_>>())
    } else {
        None
    };
    Ok(SystemReport { systems, trend })
}
