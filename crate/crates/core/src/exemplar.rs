//! Exemplar-memory head: the prediction blends the labels of a small set of
//! stored training examples, weighted by cosine similarity between learned
//! projections of the input and of each exemplar.
//!
//! For pooled input `y` and exemplars `(y*_d, i*_d)`:
//!
//! ```text
//! a = sum_d cos(f(y), g(y*_d)) * i*_d
//! r = h(a)
//! output = sigmoid(r)
//! ```
//!
//! `f`, `g` and `h` are independent affine maps. The sum is not normalised
//! by the number of exemplars; `h` absorbs the scale.

use ndarray::{Array1, ArrayView1};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DecoderFeatures, FeatureKey};
use crate::model::{
    nest, nest_mut, sigmoid, Affine, Module, ModelDims, ParamView, ParamViewMut, Trunk,
    TrunkCache,
};
use crate::training::TrainingExample;

/// Exemplars drawn per minibatch and per evaluation run.
pub const DEFAULT_EXEMPLARS: usize = 8;
/// Lower bound on the product of norms in each cosine.
pub const NORM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarParams {
    pub f: Affine,
    pub g: Affine,
    pub h: Affine,
}

impl ExemplarParams {
    pub fn init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            f: Affine::init(dim, dim, rng),
            g: Affine::init(dim, dim, rng),
            h: Affine::init(1, 1, rng),
        }
    }

    /// `f = g = identity`, `h(a) = a`.
    pub fn identity(dim: usize) -> Self {
        Self {
            f: Affine::identity(dim),
            g: Affine::identity(dim),
            h: Affine::identity(1),
        }
    }
}

impl Module for ExemplarParams {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("f", self.f.params());
        v.extend(nest("g", self.g.params()));
        v.extend(nest("h", self.h.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("f", self.f.params_mut());
        v.extend(nest_mut("g", self.g.params_mut()));
        v.extend(nest_mut("h", self.h.params_mut()));
        v
    }
}

/// Exemplars by feature key, with labels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarMemory {
    pub entries: Vec<TrainingExample>,
}

impl ExemplarMemory {
    pub fn new(entries: Vec<TrainingExample>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("exemplar memory must not be empty".into()));
        }
        if let Some(bad) = entries.iter().find(|e| !(0.0..=1.0).contains(&e.label)) {
            return Err(Error::InvalidArgument(format!(
                "exemplar {} has label {} outside [0, 1]",
                bad.key.signal_id, bad.label
            )));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &FeatureKey> {
        self.entries.iter().map(|e| &e.key)
    }

    pub fn labels(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

/// Inference memory recorded with a checkpoint: the draw seed and the
/// exemplars it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryManifest {
    pub seed: u64,
    pub exemplars: Vec<TrainingExample>,
}

impl MemoryManifest {
    pub fn memory(&self) -> Result<ExemplarMemory> {
        ExemplarMemory::new(self.exemplars.clone())
    }
}

/// Draws `d` distinct examples uniformly without replacement.
pub fn sample_exemplars<R: Rng + ?Sized>(
    pool: &[TrainingExample],
    d: usize,
    rng: &mut R,
) -> Result<ExemplarMemory> {
    if d == 0 || pool.len() < d {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {d} exemplars from a pool of {}",
            pool.len()
        )));
    }
    let picks = index::sample(rng, pool.len(), d);
    ExemplarMemory::new(picks.into_iter().map(|i| pool[i].clone()).collect())
}

/// Exemplars after the trunk: pooled vectors `y*_d` with labels `i*_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledMemory {
    pub vectors: Vec<Array1<f64>>,
    pub labels: Vec<f64>,
}

impl PooledMemory {
    pub fn new(vectors: Vec<Array1<f64>>, labels: Vec<f64>) -> Result<Self> {
        if vectors.is_empty() || vectors.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "pooled memory needs matching non-empty vectors and labels, got {} and {}",
                vectors.len(),
                labels.len()
            )));
        }
        Ok(Self { vectors, labels })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BlendCache {
    fy: Array1<f64>,
    f_norm: f64,
    gs: Vec<Array1<f64>>,
    g_norms: Vec<f64>,
    pub cosines: Vec<f64>,
    /// Terms whose norm product fell below [`NORM_EPS`].
    pub guarded: Vec<bool>,
}

impl BlendCache {
    pub fn guarded_terms(&self) -> usize {
        self.guarded.iter().filter(|&&g| g).count()
    }
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Similarity-weighted label mass `a`.
pub fn exemplar_blend(
    y: ArrayView1<f64>,
    memory: &PooledMemory,
    params: &ExemplarParams,
) -> (f64, BlendCache) {
    let fy = params.f.forward(y);
    let f_norm = norm(&fy);
    let mut a = 0.0;
    let mut gs = Vec::with_capacity(memory.len());
    let mut g_norms = Vec::with_capacity(memory.len());
    let mut cosines = Vec::with_capacity(memory.len());
    let mut guarded = Vec::with_capacity(memory.len());
    for (ys, &label) in memory.vectors.iter().zip(&memory.labels) {
        let g = params.g.forward(ys.view());
        let g_norm = norm(&g);
        let denom = f_norm * g_norm;
        let clamped = !(denom > NORM_EPS);
        let cos = fy.dot(&g) / if clamped { NORM_EPS } else { denom };
        a += cos * label;
        gs.push(g);
        g_norms.push(g_norm);
        cosines.push(cos);
        guarded.push(clamped);
    }
    (
        a,
        BlendCache {
            fy,
            f_norm,
            gs,
            g_norms,
            cosines,
            guarded,
        },
    )
}

/// Backward of [`exemplar_blend`]: accumulates into `grad.f` and `grad.g`,
/// returns `(dL/dy, [dL/dy*_d])`.
pub fn blend_backward(
    y: ArrayView1<f64>,
    memory: &PooledMemory,
    params: &ExemplarParams,
    cache: &BlendCache,
    da: f64,
    grad: &mut ExemplarParams,
) -> (Array1<f64>, Vec<Array1<f64>>) {
    let mut d_fy = Array1::<f64>::zeros(cache.fy.len());
    let mut d_memory = Vec::with_capacity(memory.len());
    for d in 0..memory.len() {
        let weight = da * memory.labels[d];
        let g = &cache.gs[d];
        let c = cache.cosines[d];
        let (d_f, d_g) = if cache.guarded[d] {
            (g / NORM_EPS, &cache.fy / NORM_EPS)
        } else {
            let denom = cache.f_norm * cache.g_norms[d];
            (
                g / denom - &cache.fy * (c / (cache.f_norm * cache.f_norm)),
                &cache.fy / denom - g * (c / (cache.g_norms[d] * cache.g_norms[d])),
            )
        };
        d_fy.scaled_add(weight, &d_f);
        let d_g = d_g * weight;
        d_memory.push(
            params
                .g
                .backward(memory.vectors[d].view(), d_g.view(), &mut grad.g),
        );
    }
    let dy = params.f.backward(y, d_fy.view(), &mut grad.f);
    (dy, d_memory)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondaryOutput {
    pub a: f64,
    pub r: f64,
    pub output: f64,
}

/// `sigmoid(h(a))` for a pooled input.
pub fn secondary_head(
    y: ArrayView1<f64>,
    memory: &PooledMemory,
    params: &ExemplarParams,
) -> (SecondaryOutput, BlendCache) {
    let (a, cache) = exemplar_blend(y, memory, params);
    let r = params.h.weight[[0, 0]] * a + params.h.bias[0];
    (
        SecondaryOutput {
            a,
            r,
            output: sigmoid(r),
        },
        cache,
    )
}

/// Trunk followed by the exemplar head.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryModel {
    pub trunk: Trunk,
    pub exemplar: ExemplarParams,
}

#[derive(Debug, Clone)]
pub struct SecondaryCache {
    pub trunk: TrunkCache,
    pub pooled: Array1<f64>,
    pub blend: BlendCache,
    pub out: SecondaryOutput,
}

impl SecondaryModel {
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let trunk = Trunk::init(dims, rng);
        let exemplar = ExemplarParams::init(dims.pooled_dim(), rng);
        Self { trunk, exemplar }
    }

    pub fn dims(&self) -> ModelDims {
        self.trunk.dims()
    }

    /// Runs exemplar features through the trunk. The caches are needed only
    /// when gradients must reach the trunk through the exemplars.
    pub fn pool_memory(
        &self,
        features: &[&DecoderFeatures],
        labels: &[f64],
    ) -> Result<(PooledMemory, Vec<TrunkCache>)> {
        let mut vectors = Vec::with_capacity(features.len());
        let mut caches = Vec::with_capacity(features.len());
        for f in features {
            let (y, cache) = self.trunk.forward(f)?;
            vectors.push(y);
            caches.push(cache);
        }
        Ok((PooledMemory::new(vectors, labels.to_vec())?, caches))
    }

    pub fn forward(&self, features: &DecoderFeatures, memory: &PooledMemory) -> Result<SecondaryCache> {
        let (pooled, trunk) = self.trunk.forward(features)?;
        let (out, blend) = secondary_head(pooled.view(), memory, &self.exemplar);
        if !out.r.is_finite() {
            return Err(Error::NonFinite("exemplar head".into()));
        }
        Ok(SecondaryCache {
            trunk,
            pooled,
            blend,
            out,
        })
    }

    pub fn predict(&self, features: &DecoderFeatures, memory: &PooledMemory) -> Result<f64> {
        self.forward(features, memory).map(|c| c.out.output)
    }

    /// Accumulates gradients of `d_output * output` through the head and the
    /// input's trunk pass. Returns gradients with respect to each pooled
    /// exemplar vector, for the caller to push through the exemplar trunk
    /// passes.
    pub fn backward(
        &self,
        features: &DecoderFeatures,
        cache: &SecondaryCache,
        memory: &PooledMemory,
        d_output: f64,
        grad: &mut SecondaryModel,
    ) -> Vec<Array1<f64>> {
        let s = cache.out.output;
        let dr = d_output * s * (1.0 - s);
        grad.exemplar.h.weight[[0, 0]] += dr * cache.out.a;
        grad.exemplar.h.bias[0] += dr;
        let da = dr * self.exemplar.h.weight[[0, 0]];
        let (dy, d_memory) = blend_backward(
            cache.pooled.view(),
            memory,
            &self.exemplar,
            &cache.blend,
            da,
            &mut grad.exemplar,
        );
        self.trunk
            .backward(features, &cache.trunk, dy.view(), &mut grad.trunk);
        d_memory
    }
}

impl Module for SecondaryModel {
    fn params(&self) -> Vec<ParamView<'_>> {
        let mut v = nest("trunk", self.trunk.params());
        v.extend(nest("exemplar", self.exemplar.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<ParamViewMut<'_>> {
        let mut v = nest_mut("trunk", self.trunk.params_mut());
        v.extend(nest_mut("exemplar", self.exemplar.params_mut()));
        v
    }
}
