use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attention::{AttentionCache, AttentionPooling};
use super::lstm::{Blstm, BlstmCache};
use super::params::{nest, nest_mut, Module, ParamView, ParamViewMut};
use super::weighting::LayerWeighting;
use crate::error::{Error, Result};
use crate::features::{DecoderFeatures, FEATURE_DIM, LAYER_COUNT};

/// Layer sizes shared by both models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub feature_dim: usize,
    pub layers: usize,
    /// LSTM hidden size per direction.
    pub hidden: usize,
    /// Width of the attention scoring layer.
    pub attn_hidden: usize,
}

impl ModelDims {
    /// Decoder of the small ASR model: 12 layers of width 768, BLSTM
    /// 768 -> 2 x 384, attention scorer 768 -> 1536 -> 1.
    pub const fn standard() -> Self {
        Self {
            feature_dim: FEATURE_DIM,
            layers: LAYER_COUNT,
            hidden: 384,
            attn_hidden: 1536,
        }
    }

    /// Same proportions as [`ModelDims::standard`] for another feature shape:
    /// BLSTM output width equal to the feature width, attention twice that.
    pub const fn for_features(feature_dim: usize, layers: usize) -> Self {
        Self {
            feature_dim,
            layers,
            hidden: feature_dim.div_ceil(2),
            attn_hidden: 2 * feature_dim,
        }
    }

    pub const fn pooled_dim(&self) -> usize {
        2 * self.hidden
    }
}

impl Default for ModelDims {
    fn default() -> Self {
        Self::standard()
    }
}

/// Layer weighting, two BLSTM layers and attention pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Trunk {
    pub weighting: LayerWeighting,
    pub blstm1: Blstm,
    pub blstm2: Blstm,
    pub attention: AttentionPooling,
}

#[derive(Debug, Clone)]
pub struct TrunkCache {
    blstm1: BlstmCache,
    blstm2: BlstmCache,
    h2: Array2<f64>,
    attention: AttentionCache,
}

impl TrunkCache {
    /// Attention weights over word positions.
    pub fn attention_weights(&self) -> &Array1<f64> {
        &self.attention.alpha
    }

    /// Output rows of the second BLSTM layer.
    pub fn blstm_output(&self) -> &Array2<f64> {
        &self.h2
    }
}

fn check_finite<'a>(stage: &str, mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{stage} output")))
    }
}

impl Trunk {
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let pooled = dims.pooled_dim();
        Self {
            weighting: LayerWeighting::new(dims.layers),
            blstm1: Blstm::init(dims.feature_dim, dims.hidden, rng),
            blstm2: Blstm::init(pooled, dims.hidden, rng),
            attention: AttentionPooling::init(pooled, dims.attn_hidden, rng),
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            feature_dim: self.blstm1.fwd.input_size(),
            layers: self.weighting.raw.len(),
            hidden: self.blstm1.fwd.hidden_size(),
            attn_hidden: self.attention.transform.output_dim(),
        }
    }

    /// Pooled utterance vector `y` and the activations needed for backward.
    pub fn forward(&self, features: &DecoderFeatures) -> Result<(Array1<f64>, TrunkCache)> {
        let dims = self.dims();
        features.check_dims(dims.feature_dim, dims.layers)?;
        let weighted = self.weighting.forward(features.values());
        check_finite("layer weighting", weighted.iter())?;
        let (h1, blstm1) = self.blstm1.forward(weighted.view());
        check_finite("blstm1", h1.iter())?;
        let (h2, blstm2) = self.blstm2.forward(h1.view());
        check_finite("blstm2", h2.iter())?;
        let (y, attention) = self.attention.forward(h2.view());
        check_finite("attention pooling", y.iter())?;
        Ok((
            y,
            TrunkCache {
                blstm1,
                blstm2,
                h2,
                attention,
            },
        ))
    }

    pub fn backward(
        &self,
        features: &DecoderFeatures,
        cache: &TrunkCache,
        dy: ArrayView1<f64>,
        grad: &mut Trunk,
    ) {
        let dh2 = self
            .attention
            .backward(cache.h2.view(), &cache.attention, dy, &mut grad.attention);
        let dh1 = self.blstm2.backward(&cache.blstm2, dh2.view(), &mut grad.blstm2);
        let dx = self.blstm1.backward(&cache.blstm1, dh1.view(), &mut grad.blstm1);
        self.weighting
            .backward(features.values(), dx.view(), &mut grad.weighting);
    }
}

impl Module for Trunk {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("layer_weighting", self.weighting.params());
        v.extend(nest("blstm1", self.blstm1.params()));
        v.extend(nest("blstm2", self.blstm2.params()));
        v.extend(nest("attention", self.attention.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("layer_weighting", self.weighting.params_mut());
        v.extend(nest_mut("blstm1", self.blstm1.params_mut()));
        v.extend(nest_mut("blstm2", self.blstm2.params_mut()));
        v.extend(nest_mut("attention", self.attention.params_mut()));
        v
    }
}
