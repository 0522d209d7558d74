use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::affine::Affine;
use super::params::{nest, nest_mut, Module, ParamView, ParamViewMut};
use super::weighting::softmax;

/// Attention pooling over a sequence of row vectors:
/// `s_w = score(tanh(transform(h_w)))`, `alpha = softmax(s)`,
/// `y = sum_w alpha_w h_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPooling {
    pub transform: Affine,
    pub score: Affine,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// `tanh(transform(h))`, `(T, K)`.
    hidden: Array2<f64>,
    pub alpha: Array1<f64>,
}

impl AttentionPooling {
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            transform: Affine::init(input, hidden, rng),
            score: Affine::init(hidden, 1, rng),
        }
    }

    pub fn forward(&self, h: ArrayView2<f64>) -> (Array1<f64>, AttentionCache) {
        let hidden = self.transform.forward_rows(h).mapv(f64::tanh);
        let scores = self.score.forward_rows(hidden.view()).column(0).to_owned();
        let alpha = softmax(&scores);
        let y = alpha.dot(&h);
        (y, AttentionCache { hidden, alpha })
    }

    pub fn backward(
        &self,
        h: ArrayView2<f64>,
        cache: &AttentionCache,
        dy: ArrayView1<f64>,
        grad: &mut AttentionPooling,
    ) -> Array2<f64> {
        let alpha = &cache.alpha;
        // Direct path through the convex combination.
        let mut dh = Array2::from_shape_fn(h.dim(), |(w, c)| alpha[w] * dy[c]);
        let d_alpha = h.dot(&dy);
        let inner = alpha.dot(&d_alpha);
        let d_scores = alpha * &(d_alpha - inner);
        let d_scores = d_scores.insert_axis(ndarray::Axis(1));
        let d_hidden = self
            .score
            .backward_rows(cache.hidden.view(), d_scores.view(), &mut grad.score);
        let d_pre = d_hidden * &cache.hidden.mapv(|u| 1.0 - u * u);
        dh += &self
            .transform
            .backward_rows(h, d_pre.view(), &mut grad.transform);
        dh
    }
}

impl Module for AttentionPooling {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("transform", self.transform.params());
        v.extend(nest("score", self.score.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("transform", self.transform.params_mut());
        v.extend(nest_mut("score", self.score.params_mut()));
        v
    }
}
