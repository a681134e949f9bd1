//! KR-blocks and the full KRNET denoiser.

mod block;
mod config;
mod network;
mod unit;

pub use block::{kr_block_backward, kr_block_forward, KrBlock};
pub use config::{receptive_field, receptive_field_of, KrBlockVariant, NetworkConfig};
pub use network::{build_network, network_backward, network_forward, Network};
pub use unit::CompositeUnit;
