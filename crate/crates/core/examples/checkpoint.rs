//! Saves a model to safetensors and loads it back.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use si_predict::model::{
    load_checkpoint, save_checkpoint, CheckpointMeta, ModelDims, ModelKind, PrimaryModel, TrainedModel,
};

fn main() -> anyhow::Result<()> {
    let dims = ModelDims::for_features(32, 12);
    let model = PrimaryModel::init(dims, &mut ChaCha8Rng::seed_from_u64(9));
    let meta = CheckpointMeta {
        model_kind: ModelKind::Primary,
        backend_identity: "mock:9:d32x12".into(),
        config_hash: "example".into(),
        dims,
        eval_memory: None,
    };
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("primary.safetensors");
    save_checkpoint(&path, &model, &meta)?;
    println!("{} bytes", std::fs::metadata(&path)?.len());

    let (loaded, meta2) = load_checkpoint(&path)?;
    assert_eq!(meta2, meta);
    assert_eq!(loaded, TrainedModel::Primary(model));
    println!("{} parameters restored, backend {}", loaded.num_params(), meta2.backend_identity);
    Ok(())
}
