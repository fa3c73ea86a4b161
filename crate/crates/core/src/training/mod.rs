//! Training of the update rule by backpropagation through full rollouts.

mod backward;
mod batch;
pub mod gradcheck;
mod loss;
mod optim;
mod trainer;

pub use backward::{accumulate_gradients, backprop, backward};
pub use batch::{select_target, substitute_batch, substitution_count, Feed, FeedKind, TargetSpec};
pub use loss::{mse_loss, mse_loss_grad, LossChannels, TargetImage};
pub use optim::{AdamConfig, AdamState, NonFiniteGradient};
pub use trainer::{train, ConvergenceReport, LossRecord, LrMilestone, TrainOutcome, Trainer, TrainingConfig};
