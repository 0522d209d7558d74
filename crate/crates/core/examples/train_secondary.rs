//! Trains a small exemplar-based model. A fresh memory of exemplars is drawn
//! for every minibatch; the memory fixed for inference is printed at the end.

use si_predict::features::MockBackend;
use si_predict::model::{ModelDims, ModelKind};
use si_predict::synth::planted_examples;
use si_predict::training::{train, TrainConfig, ValidationSets};

fn main() -> anyhow::Result<()> {
    let backend = MockBackend::new(2).with_planted_signal().with_dims(8, 4).with_word_range(2, 4);
    let (source, examples) = planted_examples(&backend, "ex", 64)?;

    let config = TrainConfig {
        epochs: 4,
        learning_rate: 3e-3,
        exemplars: 4,
        dims: ModelDims::for_features(8, 4),
        ..TrainConfig::defaults(ModelKind::Secondary)
    };
    let outcome = train(&config, &examples, ValidationSets::default(), &source)?;
    print!("{}", outcome.history.to_csv());
    for draw in outcome.memory_log.iter().take(3) {
        let ids: Vec<&str> = draw.keys.iter().map(|k| k.signal_id.as_str()).collect();
        println!("epoch {} batch {}: {ids:?}", draw.epoch, draw.batch);
    }
    let memory = outcome.eval_memory.expect("secondary models fix an inference memory");
    println!("inference memory (seed {}):", memory.seed);
    for e in &memory.exemplars {
        println!("  {} {} label {:.3}", e.key.signal_id, e.key.channel, e.label);
    }
    Ok(())
}
