use ndarray::{Array1, ArrayView1};
use rand::Rng;

use super::affine::Affine;
use super::params::{nest, nest_mut, Module, ParamView, ParamViewMut};
use super::trunk::{ModelDims, Trunk, TrunkCache};
use crate::error::{Error, Result};
use crate::features::DecoderFeatures;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trunk followed by a single sigmoid unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryModel {
    pub trunk: Trunk,
    pub head: Affine,
}

#[derive(Debug, Clone)]
pub struct PrimaryCache {
    pub trunk: TrunkCache,
    pub pooled: Array1<f64>,
    pub output: f64,
}

impl PrimaryModel {
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let trunk = Trunk::init(dims, rng);
        let head = Affine::init(dims.pooled_dim(), 1, rng);
        Self { trunk, head }
    }

    pub fn dims(&self) -> ModelDims {
        self.trunk.dims()
    }

    /// Predicted correctness in (0, 1).
    pub fn predict(&self, features: &DecoderFeatures) -> Result<f64> {
        self.forward(features).map(|c| c.output)
    }

    pub fn forward(&self, features: &DecoderFeatures) -> Result<PrimaryCache> {
        let (pooled, trunk) = self.trunk.forward(features)?;
        let logit = self.head.forward(pooled.view())[0];
        if !logit.is_finite() {
            return Err(Error::NonFinite("primary head".into()));
        }
        Ok(PrimaryCache {
            trunk,
            pooled,
            output: sigmoid(logit),
        })
    }

    /// Accumulates `d_output * d(output)/d(params)` into `grad`.
    pub fn backward(
        &self,
        features: &DecoderFeatures,
        cache: &PrimaryCache,
        d_output: f64,
        grad: &mut PrimaryModel,
    ) {
        let p = cache.output;
        let d_logit = Array1::from_elem(1, d_output * p * (1.0 - p));
        let dy = self
            .head
            .backward(cache.pooled.view(), d_logit.view(), &mut grad.head);
        self.trunk
            .backward(features, &cache.trunk, ArrayView1::from(&dy), &mut grad.trunk);
    }
}

impl Module for PrimaryModel {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("trunk", self.trunk.params());
        v.extend(nest("head", self.head.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("trunk", self.trunk.params_mut());
        v.extend(nest_mut("head", self.head.params_mut()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exemplar::SecondaryModel;
    use crate::features::MockBackend;
    use crate::model::check_gradients;
    use ndarray::Array3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> ModelDims {
        ModelDims {
            feature_dim: 6,
            layers: 4,
            hidden: 3,
            attn_hidden: 5,
        }
    }

    fn features(seed: u64, w: usize, dims: ModelDims) -> DecoderFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DecoderFeatures::new(Array3::from_shape_simple_fn(
            (w, dims.feature_dim, dims.layers),
            || rng.random_range(-1.5f32..1.5),
        ))
        .unwrap()
    }

    #[test]
    fn parameter_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PrimaryModel::init(ModelDims::standard(), &mut rng);
        assert_eq!(p.trunk.weighting.num_params(), 12);
        let n = p.num_params();
        assert_eq!(n, 12 + 2 * 3_542_016 + (768 * 1536 + 1536) + (1536 + 1) + 769);
        assert!((n as f64 / 8.3e6 - 1.0).abs() < 0.1, "{n}");
        let s = SecondaryModel::init(ModelDims::standard(), &mut rng);
        let m = s.num_params();
        assert_eq!(m, n - 769 + 2 * (768 * 768 + 768) + 2);
        assert!((m as f64 / 10e6 - 1.0).abs() < 0.1, "{m}");
    }

    #[test]
    fn zero_head_gives_one_half_and_outputs_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = PrimaryModel::init(small(), &mut rng);
        for seed in 0..20 {
            let p = model.predict(&features(seed, 1 + seed as usize % 5, small())).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
        model.head = Affine::zeros(6, 1);
        assert_eq!(model.predict(&features(3, 4, small())).unwrap(), 0.5);
    }

    #[test]
    fn single_word_pools_to_its_blstm_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = PrimaryModel::init(small(), &mut rng);
        let cache = model.forward(&features(5, 1, small())).unwrap();
        assert_eq!(cache.trunk.attention_weights().to_vec(), vec![1.0]);
        assert_eq!(cache.pooled, cache.trunk.blstm_output().row(0));
    }

    #[test]
    fn duplicated_word_keeps_attention_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = PrimaryModel::init(small(), &mut rng);
        let one = features(6, 1, small());
        let two = DecoderFeatures::new(ndarray::concatenate![
            ndarray::Axis(0),
            one.values(),
            one.values()
        ])
        .unwrap();
        let cache = model.forward(&two).unwrap();
        let alpha = cache.trunk.attention_weights();
        assert!((alpha.sum() - 1.0).abs() < 1e-12);
        let h = cache.trunk.blstm_output();
        if h.row(0) == h.row(1) {
            assert_eq!(cache.pooled, model.forward(&one).unwrap().pooled);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = PrimaryModel::init(small(), &mut rng);
        let f = features(9, 5, small());
        assert_eq!(model.predict(&f).unwrap(), model.predict(&f).unwrap());
    }

    #[test]
    fn golden_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let model = PrimaryModel::init(ModelDims::standard(), &mut rng);
        let f = MockBackend::new(7).features_for_samples(&[0.25, -0.5, 0.125]);
        let p = model.predict(&f).unwrap();
        assert!((p - GOLDEN_PRIMARY).abs() < 1e-12, "{p:.17}");
    }

    const GOLDEN_PRIMARY: f64 = 0.50706317251519872;

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut model = PrimaryModel::init(small(), &mut rng);
            model
                .trunk
                .weighting
                .raw
                .mapv_inplace(|_| rng.random_range(-1.0..1.0));
            let f = features(seed, 1 + seed as usize % 5, small());
            let target = 0.3;
            let loss = |m: &PrimaryModel| (m.predict(&f).unwrap() - target).powi(2);
            let cache = model.forward(&f).unwrap();
            let mut grad = model.zeros_like();
            model.backward(&f, &cache, 2.0 * (cache.output - target), &mut grad);
            let report = check_gradients(&model, &grad, loss, |_| true, 1e-5, 1e-7, 8, &mut rng);
            assert!(report.max_rel_error < 1e-4, "{report:?}");
        }
    }
}
