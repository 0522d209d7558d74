//! Parameter counts of both models at full size and one forward pass of the
//! primary model on mock features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use si_predict::data::{prepare_samples, Channel};
use si_predict::exemplar::SecondaryModel;
use si_predict::features::MockBackend;
use si_predict::model::{ModelDims, Module, PrimaryModel};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let dims = ModelDims::standard();
    let primary = PrimaryModel::init(dims, &mut rng);
    let secondary = SecondaryModel::init(dims, &mut rng);
    println!("primary   {:>10} parameters", primary.num_params());
    println!("secondary {:>10} parameters", secondary.num_params());

    let backend = MockBackend::new(5).with_word_range(3, 6);
    let features = backend.extract(&prepare_samples(&[0.2; 400], 16_000, Channel::Left))?;
    let cache = primary.forward(&features)?;
    println!("prediction {:.4}", cache.output);
    println!("layer weights {:.4}", primary.trunk.weighting.weights());
    println!("attention over {} words {:.4}", features.word_count(), cache.trunk.attention_weights());
    Ok(())
}
