use ndarray::{Array1, Array2, ArrayView2, ArrayView3, Axis};

use super::params::{Module, ParamView, ParamViewMut};

pub(crate) fn softmax(x: &Array1<f64>) -> Array1<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = x.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e / sum
}

/// Learnable mixing of decoder layers: softmax over raw weights that start
/// at 1, so the initial mix is the plain layer mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeighting {
    pub raw: Array1<f64>,
}

impl LayerWeighting {
    pub fn new(layers: usize) -> Self {
        Self {
            raw: Array1::ones(layers),
        }
    }

    /// Softmax of the raw weights.
    pub fn weights(&self) -> Array1<f64> {
        softmax(&self.raw)
    }

    /// `out[w, c] = sum_k softmax(raw)_k * features[w, c, k]`
    pub fn forward(&self, features: ArrayView3<f32>) -> Array2<f64> {
        let z = self.weights();
        let (w, d, _) = features.dim();
        let mut out = Array2::<f64>::zeros((w, d));
        for (mut row, frame) in out.outer_iter_mut().zip(features.outer_iter()) {
            for (o, layers) in row.iter_mut().zip(frame.outer_iter()) {
                *o = layers.iter().zip(&z).map(|(&f, &zk)| f as f64 * zk).sum();
            }
        }
        out
    }

    pub fn backward(&self, features: ArrayView3<f32>, d_out: ArrayView2<f64>, grad: &mut LayerWeighting) {
        let z = self.weights();
        let layers = z.len();
        let mut dz = Array1::<f64>::zeros(layers);
        for (frame, drow) in features.outer_iter().zip(d_out.outer_iter()) {
            for (per_layer, &g) in frame.outer_iter().zip(drow.iter()) {
                for (acc, &f) in dz.iter_mut().zip(per_layer.iter()) {
                    *acc += g * f as f64;
                }
            }
        }
        let inner = z.dot(&dz);
        grad.raw += &(&z * &(dz - inner));
    }
}

impl Module for LayerWeighting {
    fn params(&self) -> Vec<ParamView<'_>> {
        vec![("raw".into(), self.raw.view().into_dyn())]
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        vec![("raw".into(), self.raw.view_mut().into_dyn())]
    }
}

/// Mean over layers, the value of the weighted sum at initialisation.
pub fn layer_mean(features: ArrayView3<f32>) -> Array2<f64> {
    features
        .mapv(f64::from)
        .mean_axis(Axis(2))
        .expect("at least one layer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(rng: &mut ChaCha8Rng, w: usize, d: usize, l: usize) -> Array3<f32> {
        Array3::from_shape_simple_fn((w, d, l), || rng.random_range(-2.0f32..2.0))
    }

    #[test]
    fn uniform_at_initialisation() {
        let lw = LayerWeighting::new(12);
        let w = lw.weights();
        assert!(w.iter().all(|&v| (v - 1.0 / 12.0).abs() < 1e-15));
        assert!((w.sum() - 1.0).abs() < 1e-12);
        assert_eq!(lw.num_params(), 12);
    }

    #[test]
    fn equal_weights_give_layer_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_features(&mut rng, 3, 768, 12);
        let out = LayerWeighting::new(12).forward(f.view());
        let mean = layer_mean(f.view());
        for (a, b) in out.iter().zip(mean.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_weight_selects_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_features(&mut rng, 2, 16, 12);
        let mut lw = LayerWeighting::new(12);
        lw.raw[4] += 100.0;
        let out = lw.forward(f.view());
        for w in 0..2 {
            for c in 0..16 {
                assert!((out[[w, c]] - f[[w, c, 4]] as f64).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_features(&mut rng, 3, 768, 12);
        let mut lw = LayerWeighting::new(12);
        lw.raw.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
        let out = lw.forward(f.view());

        let exps: Vec<f64> = lw.raw.iter().map(|r| r.exp()).collect();
        let total: f64 = exps.iter().sum();
        for w in 0..3 {
            for c in 0..768 {
                let mut acc = 0.0;
                for k in 0..12 {
                    acc += exps[k] / total * f[[w, c, k]] as f64;
                }
                assert!((out[[w, c]] - acc).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn shift_invariance(shift in -50.0f64..50.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_features(&mut rng, 2, 8, 12);
            let mut lw = LayerWeighting::new(12);
            lw.raw.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
            let base = lw.forward(f.view());
            let mut shifted = lw.clone();
            shifted.raw += shift;
            let out = shifted.forward(f.view());
            for (a, b) in out.iter().zip(base.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            prop_assert!((shifted.weights().sum() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn layer_permutation_equivariance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_features(&mut rng, 2, 8, 12);
            let mut lw = LayerWeighting::new(12);
            lw.raw.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
            let mut perm: Vec<usize> = (0..12).collect();
            rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
            let fp = Array3::from_shape_fn(f.dim(), |(w, c, k)| f[[w, c, perm[k]]]);
            let mut lp = lw.clone();
            for k in 0..12 {
                lp.raw[k] = lw.raw[perm[k]];
            }
            let a = lw.forward(f.view());
            let b = lp.forward(fp.view());
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
