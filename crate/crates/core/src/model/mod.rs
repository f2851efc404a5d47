//! The from-scratch convolutional regressor: layers, masked loss, exact
//! gradients, Adam, the training loop, gradient verification, and
//! checkpointing.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod loss;
pub mod net;
pub mod train;

mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint,
};
pub use conv::ConvLayer;
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{loss_and_gradients, masked_mse, Gradients};
pub use net::{
    ConvNet, NetShape, DEFAULT_FEATURES, DEFAULT_INIT_SEED, DEFAULT_KERNEL, DEFAULT_LAYERS,
};
pub use train::{train, validation_loss, EpochStats, TrainConfig, TrainOutcome};
