//! Minibatch training of the primary and secondary models.

mod config;
mod dataset;
mod optim;
mod trainer;

pub use config::TrainConfig;
pub use dataset::{make_training_examples, mse_loss, ExampleSet, TrainingExample};
pub use optim::{clip_gradient, AdamW};
pub use trainer::{
    predict_better_ear_label, train, validation_rmse, EpochRecord, MemoryDraw, TrainHistory,
    TrainOutcome, ValidationSets,
};
