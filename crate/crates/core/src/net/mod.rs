//! The soft-gated hourglass network: layers, model, loss, optimizer and
//! weight files.

mod adam;
mod layers;
mod loss;
mod model;
mod params;
mod tensor;
mod train;
mod weights;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use layers::sigmoid;
pub use loss::{bce_loss, target_entropy};
pub use model::{backward, model_forward, Model};
pub use params::{ModelConfig, Parameters};
pub use tensor::{HeatmapSet, Tensor};
pub use train::{Trainer, TrainingPair};
pub use weights::{load_weights, save_weights, MAGIC};
