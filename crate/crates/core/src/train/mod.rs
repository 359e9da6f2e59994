//! Variational training: the per-font ELBO and its gradient, Adam, the
//! training loop with early stopping, and checkpoints.

mod adam;
mod checkpoint;
mod elbo;
mod trainer;

pub use adam::{Adam, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use elbo::{elbo_for_font, elbo_grad_for_font, elbo_with_noise, ElboGrad};
pub use trainer::{train, StepOutcome, TrainConfig, TrainRecord, Trainer};
