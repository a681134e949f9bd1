use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A layer, network or run configuration is internally inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("degenerate batch: channel {channel} has a single element per batch in train mode")]
    DegenerateBatch { channel: usize },
    /// An operation was called in the wrong lifecycle state (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("noise spec error: {0}")]
    Spec(String),
    #[error("empty epoch: the batch iterator yielded nothing")]
    EmptyEpoch,
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Pnm(#[from] PnmError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("bad magic {0:?}: expected P5 or P6")]
    BadMagic(String),
    #[error("unsupported maxval {0}: only 255 is accepted")]
    BadMaxval(u32),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic: not a KRN checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated checkpoint: {0}")]
    Truncated(String),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}
