//! Loss, initialisation, optimizer, learning-rate schedule, the epoch loop
//! and checkpointing.

mod checkpoint;
mod init;
mod loss;
mod optim;
mod schedule;
mod trainer;

pub use checkpoint::{
    checkpoint_load, checkpoint_save, decode_checkpoint, encode_checkpoint, MAGIC, VERSION,
};
pub use init::he_init;
pub use loss::mse_loss;
pub use optim::{sgd_step, Sgd};
pub use schedule::{lr_at, LrSchedule};
pub use trainer::{
    patch_rng, train_epoch, EpochRecord, EpochStats, TrainConfig, TrainState, EVAL_STREAM,
    PATCH_STREAM, TRAIN_STREAM,
};
