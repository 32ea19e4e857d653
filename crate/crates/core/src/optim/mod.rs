//! Photometric loss, masked Adam, densification, and the training loop.

pub mod adam;
pub mod config;
pub mod densify;
pub mod loss;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use config::{DensifyConfig, LearningRates, OptimConfig};
pub use densify::{densify_and_prune, DensifyReport, GradStats};
pub use loss::photometric_loss;
pub use train::{train, TrainReport, TrainScope, View};
