use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exemplar::DEFAULT_EXEMPLARS;
use crate::model::{ModelDims, ModelKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Exemplars per minibatch; ignored by the primary model.
    pub exemplars: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling.
    pub clip_norm: f64,
    pub dims: ModelDims,
}

impl TrainConfig {
    pub fn primary() -> Self {
        Self {
            model_kind: ModelKind::Primary,
            epochs: 25,
            batch_size: 8,
            learning_rate: 1e-5,
            weight_decay: 1e-4,
            exemplars: DEFAULT_EXEMPLARS,
            seed: 0,
            clip_norm: 100.0,
            dims: ModelDims::standard(),
        }
    }

    pub fn secondary() -> Self {
        Self {
            model_kind: ModelKind::Secondary,
            epochs: 50,
            learning_rate: 2e-6,
            ..Self::primary()
        }
    }

    pub fn defaults(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Primary => Self::primary(),
            ModelKind::Secondary => Self::secondary(),
        }
    }

    /// Zero learning rate is allowed: it makes a run a no-op on the weights.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} is not a non-negative number", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay {} is not a non-negative number", self.weight_decay));
        }
        if self.model_kind == ModelKind::Secondary && self.exemplars == 0 {
            return bad("the secondary model needs at least one exemplar".into());
        }
        if !(self.clip_norm > 0.0) {
            return bad(format!("clip norm {} must be positive", self.clip_norm));
        }
        Ok(())
    }

    /// `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("model_kind", self.model_kind.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", format!("{:e}", self.learning_rate)),
            ("weight_decay", format!("{:e}", self.weight_decay)),
            ("exemplars", self.exemplars.to_string()),
            ("seed", self.seed.to_string()),
            ("clip_norm", format!("{:e}", self.clip_norm)),
            ("feature_dim", self.dims.feature_dim.to_string()),
            ("layers", self.dims.layers.to_string()),
            ("hidden", self.dims.hidden.to_string()),
            ("attn_hidden", self.dims.attn_hidden.to_string()),
        ]
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("config line {} has no '=': {line:?}", n + 1))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        fn take<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
            let raw = map
                .get(key)
                .ok_or_else(|| Error::Format(format!("config is missing {key}")))?;
            raw.parse()
                .map_err(|_| Error::Format(format!("config value {key}={raw} does not parse")))
        }
        let kind: String = take(&map, "model_kind")?;
        let config = Self {
            model_kind: kind.parse()?,
            epochs: take(&map, "epochs")?,
            batch_size: take(&map, "batch_size")?,
            learning_rate: take(&map, "learning_rate")?,
            weight_decay: take(&map, "weight_decay")?,
            exemplars: take(&map, "exemplars")?,
            seed: take(&map, "seed")?,
            clip_norm: take(&map, "clip_norm")?,
            dims: ModelDims {
                feature_dim: take(&map, "feature_dim")?,
                layers: take(&map, "layers")?,
                hidden: take(&map, "hidden")?,
                attn_hidden: take(&map, "attn_hidden")?,
            },
        };
        config.validate()?;
        Ok(config)
    }

    /// Hex SHA-256 of [`TrainConfig::to_kv`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_kv().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let p = TrainConfig::primary();
        assert_eq!((p.epochs, p.batch_size), (25, 8));
        assert_eq!((p.learning_rate, p.weight_decay), (1e-5, 1e-4));
        let s = TrainConfig::secondary();
        assert_eq!((s.epochs, s.batch_size, s.exemplars), (50, 8, 8));
        assert_eq!((s.learning_rate, s.weight_decay), (2e-6, 1e-4));
    }

    #[test]
    fn kv_round_trip() {
        let mut c = TrainConfig::secondary();
        c.learning_rate = 3.25e-4;
        c.seed = 77;
        let text = c.to_kv();
        assert!(text.contains("model_kind=secondary\n"));
        assert_eq!(TrainConfig::from_kv(&text).unwrap(), c);
        assert_eq!(TrainConfig::from_kv(&text).unwrap().hash(), c.hash());
        assert_ne!(TrainConfig::primary().hash(), c.hash());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = TrainConfig::primary();
        c.epochs = 0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::primary();
        c.learning_rate = -1.0;
        assert!(c.validate().is_err());
        assert!(TrainConfig::from_kv("epochs").is_err());
    }
}
