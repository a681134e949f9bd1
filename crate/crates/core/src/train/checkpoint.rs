//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! "KRN1"                      magic
//! u32                         version
//! u64 + bytes                 JSON {"network": NetworkConfig, "train": TrainConfig}
//! u64                         completed epochs
//! f64 * Σ|param|              parameter values in id order
//! f64 * Σ|param|              momentum buffers in id order
//! f64 * 2C per BN layer       running mean then running variance, layer order
//! u64 * 5                     RNG state words s0..s3, then draw counter
//! ```
//!
//! Array lengths are implied by the embedded network config.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trainer::{TrainConfig, TrainState};
use crate::data::{Rng, RngState};
use crate::error::{CheckpointError, Result};
use crate::krnet::{build_network, NetworkConfig};

pub const MAGIC: &[u8; 4] = b"KRN1";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    network: NetworkConfig,
    train: TrainConfig,
}

pub fn encode_checkpoint(state: &TrainState) -> Vec<u8> {
    let header = Header {
        network: state.net.config().clone(),
        train: state.train.clone(),
    };
    let json = serde_json::to_vec(&header).expect("config serialization is infallible");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(state.epoch as u64).to_le_bytes());
    let params = state.net.params();
    for p in &params {
        p.value.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    for p in &params {
        p.momentum_buf.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    for bn in state.net.batch_norms() {
        for v in bn.running_mean.iter().chain(&bn.running_var) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let rng = state.rng.state();
    for w in rng.s.iter().chain(std::iter::once(&rng.counter)) {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| {
            CheckpointError::Truncated(format!("{what} needs {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, dst: &mut [f64], what: &str) -> Result<(), CheckpointError> {
        let bytes = self.take(dst.len() * 8, what)?;
        for (d, chunk) in dst.iter_mut().zip(bytes.chunks_exact(8)) {
            *d = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(())
    }
}

/// Decodes a checkpoint. Fails closed: no state is returned on any error.
pub fn decode_checkpoint(data: &[u8]) -> Result<TrainState> {
    let mut r = Reader { data, pos: 0 };
    if data.len() < MAGIC.len() || &data[..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    r.pos = 4;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: VERSION,
        }
        .into());
    }
    let json_len = r.u64("config length")?;
    let json_len = usize::try_from(json_len)
        .map_err(|_| CheckpointError::Malformed("config length overflows".into()))?;
    let header: Header = serde_json::from_slice(r.take(json_len, "config")?)
        .map_err(|e| CheckpointError::Malformed(format!("config: {e}")))?;
    let epoch = r.u64("epoch")? as usize;

    let mut net = build_network(&header.network, 0)
        .map_err(|e| CheckpointError::Malformed(format!("embedded network config: {e}")))?;
    for p in net.params_mut() {
        r.f64s(&mut p.value, "parameter values")?;
    }
    for p in net.params_mut() {
        r.f64s(&mut p.momentum_buf, "momentum buffers")?;
    }
    for bn in net.batch_norms_mut() {
        r.f64s(&mut bn.running_mean, "running mean")?;
        r.f64s(&mut bn.running_var, "running variance")?;
    }
    let mut s = [0u64; 4];
    for w in &mut s {
        *w = r.u64("rng state")?;
    }
    let counter = r.u64("rng counter")?;
    if r.pos != data.len() {
        return Err(CheckpointError::Malformed(format!(
            "{} trailing bytes",
            data.len() - r.pos
        ))
        .into());
    }
    Ok(TrainState {
        net,
        train: header.train,
        epoch,
        rng: Rng::from_state(RngState { s, counter }),
    })
}

pub fn checkpoint_save(state: &TrainState, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(state))?;
    Ok(())
}

pub fn checkpoint_load(path: impl AsRef<Path>) -> Result<TrainState> {
    decode_checkpoint(&fs::read(path)?)
}
