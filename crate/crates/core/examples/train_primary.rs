//! Trains a small primary model on mock features with a planted signal and
//! prints the loss curve.
//!
//! cargo run --release --example train_primary -- [epochs]

use si_predict::features::MockBackend;
use si_predict::model::{ModelDims, ModelKind};
use si_predict::synth::planted_examples;
use si_predict::training::{train, TrainConfig, ValidationSets};

fn main() -> anyhow::Result<()> {
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let backend = MockBackend::new(1).with_planted_signal().with_dims(16, 6).with_word_range(2, 6);
    let (source, examples) = planted_examples(&backend, "ex", 160)?;

    let config = TrainConfig {
        epochs,
        learning_rate: 3e-3,
        weight_decay: 0.0,
        dims: ModelDims::for_features(16, 6),
        ..TrainConfig::defaults(ModelKind::Primary)
    };
    let outcome = train(&config, &examples, ValidationSets::default(), &source)?;
    print!("{}", outcome.history.to_csv());
    println!("best epoch {}", outcome.history.best_epoch);
    println!("layer weights {:.3}", outcome.final_model.trunk().weighting.weights());
    Ok(())
}
