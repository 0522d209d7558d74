//! Trunk, primary head and their parameter containers.

mod affine;
mod attention;
pub mod checkpoint;
pub mod gradcheck;
mod lstm;
mod params;
mod primary;
mod trunk;
mod weighting;

pub use affine::Affine;
pub use gradcheck::{check_gradients, GradCheck};
pub use attention::{AttentionCache, AttentionPooling};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, ModelKind, TrainedModel};
pub use lstm::{Blstm, BlstmCache, Lstm, LstmCache};
pub use params::{Module, ParamView, ParamViewMut};
pub(crate) use params::{nest, nest_mut};
pub use primary::{PrimaryCache, PrimaryModel};
pub(crate) use primary::sigmoid;
pub use trunk::{ModelDims, Trunk, TrunkCache};
pub use weighting::{layer_mean, LayerWeighting};
