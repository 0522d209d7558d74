//! Better-ear aggregation, RMSE by correctness bin and the per-system trend
//! on a handful of made-up predictions.

use si_predict::eval::{better_ear, fit_trend, per_system_report, rmse, rmse_by_bin};

fn main() -> anyhow::Result<()> {
    let combined = better_ear([Some(0.62), Some(0.71)], [Some(0.58), None])?;
    println!("better ear: {combined:?}");

    let truth = [95.0, 88.0, 12.0, 40.0, 67.0, 100.0, 5.0, 73.0];
    let pred = [90.0, 80.0, 30.0, 45.0, 60.0, 92.0, 20.0, 70.0];
    println!("rmse {:.3}", rmse(&pred, &truth)?);
    for bin in rmse_by_bin(&pred, &truth, 10.0)? {
        if bin.count > 0 {
            println!("  bin {:>4}: n={} rmse {:.2}", bin.center, bin.count, bin.rmse);
        }
    }

    let systems = ["E01", "E01", "E02", "E02", "E03", "E03", "E04", "E04"];
    let rows: Vec<_> = systems
        .iter()
        .zip(pred.iter().zip(&truth))
        .map(|(s, (&p, &t))| (*s, p, t))
        .collect();
    let report = per_system_report(&rows)?;
    for s in &report.systems {
        println!("  {} mean true {:.1} rmse {:.2}", s.system, s.mean_true, s.rmse);
    }
    let points: Vec<(f64, f64)> = report.systems.iter().map(|s| (s.mean_true, s.rmse)).collect();
    if let Some(t) = fit_trend(&points) {
        println!("trend: rmse = {:.3} + {:.4} x mean correctness", t.intercept, t.slope);
    }
    Ok(())
}
