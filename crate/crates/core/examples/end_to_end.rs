//! The whole pipeline through the library: synthetic corpus, feature
//! extraction, training both models, evaluation and the report.
//!
//! cargo run --release --example end_to_end -- [out-dir]

use std::path::PathBuf;

use si_predict::model::ModelKind;
use si_predict::pipeline::{cmd_evaluate, cmd_extract, cmd_train, EvaluateOptions, RunConfig};
use si_predict::synth::{write_corpus, SynthSpec};

const BACKEND: &str = "mock:1:planted:w2-6:d16x12";

fn main() -> anyhow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "si-e2e".into()));
    let backend = BACKEND.parse::<si_predict::features::FeatureBackend>()?;
    let corpus = write_corpus(&out.join("corpus"), &SynthSpec::default(), backend.as_mock())?;

    let mut run = RunConfig::new(&corpus.train_manifest, out.join("cache"), out.join("run"));
    run.backend = BACKEND.into();
    run.epochs = Some(3);
    run.learning_rate = Some(1e-3);
    println!("train: {:?}", cmd_extract(&run)?);
    for kind in [ModelKind::Primary, ModelKind::Secondary] {
        run.model = kind;
        for s in cmd_train(&run)? {
            println!("{kind} split {}: best epoch {}", s.split, s.best_epoch);
        }
    }

    let mut eval_run = run.clone();
    eval_run.manifest = corpus.eval_manifest.clone();
    println!("eval: {:?}", cmd_extract(&eval_run)?);
    let outcome = cmd_evaluate(&eval_run, &EvaluateOptions::default())?;
    let r = &outcome.report;
    println!(
        "{} signals, rmse {:.2} (primary {:?}, secondary {:?}), baseline {}",
        r.count, r.rmse_overall, r.rmse_primary, r.rmse_secondary, r.baseline_rmse
    );
    println!("artifacts in {}", outcome.dir.display());
    Ok(())
}
