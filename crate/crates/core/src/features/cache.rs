use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;

use super::DecoderFeatures;
use crate::data::Channel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SIFEAT01";
const DTYPE_F32: &[u8; 4] = b"f32\0";

/// Serialises features as: magic, dtype tag, three little-endian u64 dims
/// `(W, feature_dim, layers)`, then row-major little-endian f32 data.
pub fn write_features<W: Write>(mut out: W, features: &DecoderFeatures) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(DTYPE_F32)?;
    let (w, d, l) = features.values().dim();
    for dim in [w, d, l] {
        out.write_u64::<LittleEndian>(dim as u64)?;
    }
    for &v in features.values().iter() {
        out.write_f32::<LittleEndian>(v)?;
    }
    out.flush()
}

pub fn read_features<R: Read>(mut input: R) -> std::result::Result<DecoderFeatures, String> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|e| e.to_string())?;
    if &magic != MAGIC {
        return Err("not a feature file (bad magic)".into());
    }
    let mut dtype = [0u8; 4];
    input.read_exact(&mut dtype).map_err(|e| e.to_string())?;
    if &dtype != DTYPE_F32 {
        return Err(format!("unsupported dtype tag {dtype:?}"));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = input.read_u64::<LittleEndian>().map_err(|e| e.to_string())? as usize;
    }
    let len = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .ok_or("shape overflow")?;
    let mut data = vec![0f32; len];
    input
        .read_f32_into::<LittleEndian>(&mut data)
        .map_err(|e| format!("truncated data: {e}"))?;
    let values = Array3::from_shape_vec((dims[0], dims[1], dims[2]), data)
        .map_err(|e| e.to_string())?;
    DecoderFeatures::new(values).map_err(|e| e.to_string())
}

fn path_component(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Directory of feature files, one per `(backend identity, signal, channel)`
/// at `<root>/<backend-id>/<signal>.<channel>.features`.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    root: PathBuf,
}

impl FeatureCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, backend_id: &str, signal_id: &str, channel: Channel) -> PathBuf {
        self.root
            .join(path_component(backend_id))
            .join(format!("{}.{}.features", path_component(signal_id), channel))
    }

    pub fn contains(&self, backend_id: &str, signal_id: &str, channel: Channel) -> bool {
        self.path_for(backend_id, signal_id, channel).is_file()
    }

    /// Writes via a temporary file and rename so readers never see a partial
    /// tensor.
    pub fn store(
        &self,
        backend_id: &str,
        signal_id: &str,
        channel: Channel,
        features: &DecoderFeatures,
    ) -> Result<()> {
        let path = self.path_for(backend_id, signal_id, channel);
        let dir = path.parent().expect("cache paths have a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = path.with_extension(format!("features.tmp{}", std::process::id()));
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        write_features(BufWriter::new(file), features).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// `Ok(None)` when the entry is absent.
    pub fn load(
        &self,
        backend_id: &str,
        signal_id: &str,
        channel: Channel,
    ) -> Result<Option<DecoderFeatures>> {
        let path = self.path_for(backend_id, signal_id, channel);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        read_features(BufReader::new(file))
            .map(Some)
            .map_err(|message| Error::Cache { path, message })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct FeatureKey {
    pub signal_id: String,
    pub channel: Channel,
}

impl FeatureKey {
    pub fn new(signal_id: impl Into<String>, channel: Channel) -> Self {
        Self {
            signal_id: signal_id.into(),
            channel,
        }
    }
}

/// Read access to features for training and inference.
pub trait FeatureSource: Sync {
    fn get(&self, key: &FeatureKey) -> Result<Option<Arc<DecoderFeatures>>>;

    fn contains(&self, key: &FeatureKey) -> bool {
        matches!(self.get(key), Ok(Some(_)))
    }
}

/// Features of one backend read from a [`FeatureCache`].
#[derive(Debug, Clone)]
pub struct CachedFeatures {
    pub cache: FeatureCache,
    pub backend_id: String,
}

impl CachedFeatures {
    pub fn new(cache: FeatureCache, backend_id: impl Into<String>) -> Self {
        Self {
            cache,
            backend_id: backend_id.into(),
        }
    }
}

impl FeatureSource for CachedFeatures {
    fn get(&self, key: &FeatureKey) -> Result<Option<Arc<DecoderFeatures>>> {
        Ok(self
            .cache
            .load(&self.backend_id, &key.signal_id, key.channel)?
            .map(Arc::new))
    }

    fn contains(&self, key: &FeatureKey) -> bool {
        self.cache
            .contains(&self.backend_id, &key.signal_id, key.channel)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InMemoryFeatures {
    map: HashMap<FeatureKey, Arc<DecoderFeatures>>,
}

impl InMemoryFeatures {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: FeatureKey, features: DecoderFeatures) {
        self.map.insert(key, Arc::new(features));
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl FeatureSource for InMemoryFeatures {
    fn get(&self, key: &FeatureKey) -> Result<Option<Arc<DecoderFeatures>>> {
        Ok(self.map.get(key).cloned())
    }
}
