//! Extracts mock decoder features and round-trips them through the on-disk
//! cache.

use si_predict::data::{prepare_samples, Channel};
use si_predict::features::{FeatureBackend, FeatureCache};

fn main() -> anyhow::Result<()> {
    let backend: FeatureBackend = "mock:3:w4-9".parse()?;
    let id = backend.identity();
    let wave = prepare_samples(&[0.1, -0.2, 0.3], 16_000, Channel::Right);
    let features = backend.extract(&wave)?;
    println!(
        "{id}: {} words x {} dims x {} layers",
        features.word_count(),
        features.feature_dim(),
        features.layer_count()
    );

    let dir = tempfile::tempdir()?;
    let cache = FeatureCache::new(dir.path());
    cache.store(&id, "S0001", Channel::Right, &features)?;
    let back = cache.load(&id, "S0001", Channel::Right)?.expect("just stored");
    assert_eq!(back, features);
    assert!(cache.load(&id, "S0001", Channel::Left)?.is_none());
    println!("cached at {}", cache.path_for(&id, "S0001", Channel::Right).display());
    Ok(())
}
