pub mod data;
pub mod error;
pub mod eval;
pub mod exemplar;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
