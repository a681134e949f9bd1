//! KRNET: a convolutional image denoiser built from kernel-regulation blocks,
//! with hand-written forward and backward passes in 64-bit floating point.
//!
//! * [`nn`]: convolution, transposed convolution, batch norm, PReLU, addition.
//! * [`krnet`]: composite units, KR-blocks and the full network.
//! * [`train`]: MSE loss, He init, SGD with momentum, LR schedule, checkpoints.
//! * [`data`]: Netpbm I/O, patches, seeded RNG, noise synthesis.
//! * [`eval`]: PSNR, evaluation reports, ablations.
//! * [`gradcheck`]: finite-difference verification of all backward passes.

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod krnet;
pub mod nn;
pub mod tensor;
pub mod train;

pub use data::{Image, NoiseSpec, Rng};
pub use error::{CheckpointError, Error, PnmError, Result};
pub use eval::{EvalReport, ReportFormat};
pub use krnet::{build_network, receptive_field, KrBlockVariant, Network, NetworkConfig};
pub use nn::{BnMode, Param, ParamKind};
pub use tensor::{Shape4, Tensor4};
pub use train::{TrainConfig, TrainState};
