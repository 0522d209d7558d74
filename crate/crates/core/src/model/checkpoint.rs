use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use safetensors::tensor::{Dtype, SafeTensors, TensorView};
use serde::{Deserialize, Serialize};

use super::params::Module;
use super::primary::PrimaryModel;
use super::trunk::{ModelDims, Trunk};
use crate::error::{Error, Result};
use crate::exemplar::{MemoryManifest, SecondaryModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Primary,
    Secondary,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Primary => "primary",
            ModelKind::Secondary => "secondary",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primary" => Ok(ModelKind::Primary),
            "secondary" => Ok(ModelKind::Secondary),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind {other:?}, expected primary or secondary"
            ))),
        }
    }
}

/// Metadata stored in the checkpoint header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model_kind: ModelKind,
    pub backend_identity: String,
    pub config_hash: String,
    pub dims: ModelDims,
    /// Exemplars drawn for inference, secondary models only.
    pub eval_memory: Option<MemoryManifest>,
}

impl CheckpointMeta {
    fn to_header(&self) -> HashMap<String, String> {
        let mut h = HashMap::new();
        h.insert("model_kind".into(), self.model_kind.to_string());
        h.insert("backend_identity".into(), self.backend_identity.clone());
        h.insert("config_hash".into(), self.config_hash.clone());
        h.insert("dims".into(), serde_json::to_string(&self.dims).expect("dims serialise"));
        if let Some(m) = &self.eval_memory {
            h.insert("eval_memory".into(), serde_json::to_string(m).expect("memory serialises"));
        }
        h
    }

    fn from_header(path: &Path, h: &HashMap<String, String>) -> Result<Self> {
        let err = |message: String| Error::Checkpoint {
            path: path.to_path_buf(),
            message,
        };
        let get = |k: &str| h.get(k).ok_or_else(|| err(format!("missing metadata key {k:?}")));
        let json = |k: &str, e: serde_json::Error| err(format!("bad {k} metadata: {e}"));
        Ok(Self {
            model_kind: get("model_kind")?.parse().map_err(|e: Error| err(e.to_string()))?,
            backend_identity: get("backend_identity")?.clone(),
            config_hash: get("config_hash")?.clone(),
            dims: serde_json::from_str(get("dims")?).map_err(|e| json("dims", e))?,
            eval_memory: h
                .get("eval_memory")
                .map(|s| serde_json::from_str(s))
                .transpose()
                .map_err(|e| json("eval_memory", e))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Primary(PrimaryModel),
    Secondary(SecondaryModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Primary(_) => ModelKind::Primary,
            TrainedModel::Secondary(_) => ModelKind::Secondary,
        }
    }

    pub fn trunk(&self) -> &Trunk {
        match self {
            TrainedModel::Primary(m) => &m.trunk,
            TrainedModel::Secondary(m) => &m.trunk,
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            TrainedModel::Primary(m) => m.num_params(),
            TrainedModel::Secondary(m) => m.num_params(),
        }
    }
}

/// Writes every parameter as a little-endian f64 tensor, atomically.
pub fn save_checkpoint<M: Module>(path: &Path, model: &M, meta: &CheckpointMeta) -> Result<()> {
    let params = model.params();
    let buffers: Vec<(String, Vec<usize>, Vec<u8>)> = params
        .iter()
        .map(|(name, a)| {
            let bytes = a.iter().flat_map(|v| v.to_le_bytes()).collect();
            (name.clone(), a.shape().to_vec(), bytes)
        })
        .collect();
    let views = buffers
        .iter()
        .map(|(name, shape, bytes)| {
            TensorView::new(Dtype::F64, shape.clone(), bytes).map(|v| (name.as_str(), v))
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut data = safetensors::serialize(views, Some(meta.to_header())).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    sort_header(&mut data);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, data).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Rewrites the JSON header with sorted keys so that equal models give equal
/// bytes. The metadata map has no stable iteration order.
fn sort_header(data: &mut [u8]) {
    let n = u64::from_le_bytes(data[..8].try_into().expect("length prefix")) as usize;
    let header = &mut data[8..8 + n];
    let value: serde_json::Value = serde_json::from_slice(header).expect("header we just wrote");
    let sorted = serde_json::to_vec(&value).expect("json value");
    debug_assert!(sorted.len() <= n);
    header[..sorted.len()].copy_from_slice(&sorted);
    header[sorted.len()..].fill(b' ');
}

fn fill<M: Module>(path: &Path, st: &SafeTensors<'_>, model: &mut M) -> Result<()> {
    let err = |message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    for (name, mut target) in model.params_mut() {
        let view = st
            .tensor(&name)
            .map_err(|e| err(format!("tensor {name}: {e}")))?;
        if view.dtype() != Dtype::F64 || view.shape() != target.shape() {
            return Err(err(format!(
                "tensor {name} is {:?} {:?}, expected F64 {:?}",
                view.dtype(),
                view.shape(),
                target.shape()
            )));
        }
        for (t, chunk) in target.iter_mut().zip(view.data().chunks_exact(8)) {
            *t = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(TrainedModel, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let err = |message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    let (_, header) = SafeTensors::read_metadata(&bytes).map_err(|e| err(e.to_string()))?;
    let meta = CheckpointMeta::from_header(
        path,
        header
            .metadata()
            .as_ref()
            .ok_or_else(|| err("no metadata".into()))?,
    )?;
    let st = SafeTensors::deserialize(&bytes).map_err(|e| err(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = match meta.model_kind {
        ModelKind::Primary => {
            let mut m = PrimaryModel::init(meta.dims, &mut rng);
            fill(path, &st, &mut m)?;
            TrainedModel::Primary(m)
        }
        ModelKind::Secondary => {
            let mut m = SecondaryModel::init(meta.dims, &mut rng);
            fill(path, &st, &mut m)?;
            TrainedModel::Secondary(m)
        }
    };
    Ok((model, meta))
}
