//! Better-ear ensemble inference and the metric suite.

mod metrics;
mod predict;
mod report;

pub use metrics::{fit_trend, per_system_report, rmse, rmse_by_bin, BinRmse, SystemReport, SystemStats, Trend};
pub use predict::{better_ear, predict_records, BetterEar, PredictionRecord, Predictors};
pub use report::{
    build_report, layer_weight_report, read_predictions_csv, write_plot_data, write_predictions_csv,
    write_report_json, EvaluationReport, BASELINE_RMSE, BIN_WIDTH,
};
