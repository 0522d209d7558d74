//! The exemplar head on hand-made pooled vectors: cosine similarities to a
//! small labelled memory, the blended label mass and the final sigmoid.

use ndarray::array;
use si_predict::exemplar::{secondary_head, ExemplarParams, PooledMemory};

fn main() -> anyhow::Result<()> {
    let params = ExemplarParams::identity(3);
    let memory = PooledMemory::new(
        vec![array![1.0, 0.0, 0.0], array![0.0, 1.0, 0.0], array![1.0, 1.0, 0.0], array![0.0, 0.0, 0.0]],
        vec![0.9, 0.1, 0.5, 0.7],
    )?;
    for y in [array![1.0, 0.0, 0.0], array![0.0, 1.0, 0.0], array![0.0, 0.0, 1.0]] {
        let (out, cache) = secondary_head(y.view(), &memory, &params);
        println!(
            "y = {y}: cosines {:.3?}, a = {:.3}, output = {:.3}, guarded {}",
            cache.cosines,
            out.a,
            out.output,
            cache.guarded_terms()
        );
    }
    Ok(())
}
