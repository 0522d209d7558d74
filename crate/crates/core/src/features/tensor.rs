use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};

/// Width of each decoder layer output.
pub const FEATURE_DIM: usize = 768;
/// Number of decoder layers.
pub const LAYER_COUNT: usize = 12;

/// Word-level decoder outputs laid out as `(words, feature_dim, layers)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderFeatures {
    values: Array3<f32>,
}

impl DecoderFeatures {
    pub fn new(values: Array3<f32>) -> Result<Self> {
        let (w, d, l) = values.dim();
        if w == 0 || d == 0 || l == 0 {
            return Err(Error::Precondition(format!(
                "decoder features must be non-empty, got {w}x{d}x{l}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decoder features".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> ArrayView3<'_, f32> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array3<f32> {
        self.values
    }

    pub fn word_count(&self) -> usize {
        self.values.dim().0
    }

    pub fn feature_dim(&self) -> usize {
        self.values.dim().1
    }

    pub fn layer_count(&self) -> usize {
        self.values.dim().2
    }

    pub fn check_dims(&self, feature_dim: usize, layers: usize) -> Result<()> {
        if self.feature_dim() != feature_dim || self.layer_count() != layers {
            return Err(Error::Precondition(format!(
                "expected features of shape W x {feature_dim} x {layers}, got {:?}",
                self.values.dim()
            )));
        }
        Ok(())
    }
}
