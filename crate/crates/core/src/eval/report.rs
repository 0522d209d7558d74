use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{per_system_report, rmse, rmse_by_bin, BinRmse, SystemStats, Trend};
use super::predict::PredictionRecord;
use crate::data::{bin_center, bin_index, num_bins};
use crate::error::{Error, Result};
use crate::model::TrainedModel;

/// RMSE of the intrusive challenge baseline on the evaluation set.
pub const BASELINE_RMSE: f64 = 28.7;
pub const BIN_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub count: usize,
    pub single_channel_count: usize,
    pub rmse_overall: f64,
    pub rmse_overall_ensemble_then_max: f64,
    pub rmse_primary: Option<f64>,
    pub rmse_secondary: Option<f64>,
    pub rmse_per_split: BTreeMap<String, f64>,
    pub rmse_per_bin: Vec<BinRmse>,
    pub per_system: Vec<SystemStats>,
    pub trend: Option<Trend>,
    /// Softmax layer weights per model kind.
    pub layer_weights: BTreeMap<String, Vec<f64>>,
    pub baseline_rmse: f64,
}

/// Softmax of the raw layer weights of a trained model.
pub fn layer_weight_report(model: &TrainedModel) -> Vec<f64> {
    model.trunk().weighting.weights().to_vec()
}

fn column_rmse(records: &[PredictionRecord], pick: impl Fn(&PredictionRecord) -> Option<f64>) -> Option<f64> {
    let (p, t): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| pick(r).map(|v| (v, r.true_correctness)))
        .unzip();
    rmse(&p, &t).ok()
}

pub fn build_report(
    records: &[PredictionRecord],
    layer_weights: BTreeMap<String, Vec<f64>>,
) -> Result<EvaluationReport> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no predictions to report".into()));
    }
    let pred: Vec<f64> = records.iter().map(|r| r.pred_ensemble).collect();
    let truth: Vec<f64> = records.iter().map(|r| r.true_correctness).collect();
    let mut per_split = BTreeMap::new();
    let mut splits: Vec<u8> = records.iter().map(|r| r.split).collect();
    splits.sort_unstable();
    splits.dedup();
    for s in splits {
        let v = column_rmse(records, |r| (r.split == s).then_some(r.pred_ensemble))
            .expect("split has records");
        per_split.insert(s.to_string(), v);
    }
    let rows: Vec<(&str, f64, f64)> = records
        .iter()
        .map(|r| (r.system.as_str(), r.pred_ensemble, r.true_correctness))
        .collect();
    let systems = per_system_report(&rows)?;
    Ok(EvaluationReport {
        count: records.len(),
        single_channel_count: records.iter().filter(|r| r.single_channel).count(),
        rmse_overall: rmse(&pred, &truth)?,
        rmse_overall_ensemble_then_max: column_rmse(records, |r| Some(r.pred_ensemble_then_max))
            .expect("non-empty"),
        rmse_primary: column_rmse(records, |r| r.pred_primary),
        rmse_secondary: column_rmse(records, |r| r.pred_secondary),
        rmse_per_split: per_split,
        rmse_per_bin: rmse_by_bin(&pred, &truth, BIN_WIDTH)?,
        per_system: systems.systems,
        trend: systems.trend,
        layer_weights,
        baseline_rmse: BASELINE_RMSE,
    })
}

pub fn write_predictions_csv(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for r in records {
        w.serialize(r)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_report_json(path: &Path, report: &EvaluationReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_xy(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut s = format!("{header}\n");
    for row in rows {
        let _ = writeln!(s, "{row}");
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// One CSV per plot under `dir`.
pub fn write_plot_data(dir: &Path, records: &[PredictionRecord], report: &EvaluationReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut counts = vec![0usize; num_bins(BIN_WIDTH)];
    for r in records {
        counts[bin_index(r.true_correctness, BIN_WIDTH)] += 1;
    }
    let n = records.len() as f64;
    write_xy(
        &dir.join("correctness_histogram.csv"),
        "bin_center,proportion",
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| format!("{},{}", bin_center(i, BIN_WIDTH), c as f64 / n)),
    )?;
    write_xy(
        &dir.join("rmse_by_bin.csv"),
        "bin_center,rmse,count",
        report
            .rmse_per_bin
            .iter()
            .map(|b| format!("{},{},{}", b.center, b.rmse, b.count)),
    )?;
    write_xy(
        &dir.join("system_rmse_vs_correctness.csv"),
        "mean_true,rmse,system",
        report
            .per_system
            .iter()
            .map(|s| format!("{},{},{}", s.mean_true, s.rmse, s.system)),
    )?;
    write_xy(
        &dir.join("system_means.csv"),
        "system,mean_true,mean_predicted",
        report
            .per_system
            .iter()
            .map(|s| format!("{},{},{}", s.system, s.mean_true, s.mean_predicted)),
    )?;
    write_xy(
        &dir.join("predicted_vs_true.csv"),
        "true_correctness,predicted_correctness",
        records
            .iter()
            .map(|r| format!("{},{}", r.true_correctness, r.pred_ensemble)),
    )?;
    for (kind, weights) in &report.layer_weights {
        write_xy(
            &dir.join(format!("layer_weights_{kind}.csv")),
            "layer,weight",
            weights.iter().enumerate().map(|(k, w)| format!("{},{w}", k + 1)),
        )?;
    }
    Ok(())
}
