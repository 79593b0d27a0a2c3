//! Binary weight container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "KEED1"
//! u32 × 6       width, depth, n_blocks, length, keypoints, kernel_size
//! u32           tensor count
//! per tensor:   u32 name length, UTF-8 name, u32 rank, u64 × rank dims,
//!               f64 × product(dims)
//! ```

use super::params::{ModelConfig, Parameters};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"KEED1";

pub fn save_weights(params: &Parameters, cfg: &ModelConfig) -> Result<Vec<u8>> {
    if !params.all_finite() {
        return Err(Error::Weights("refusing to save non-finite parameters".into()));
    }
    let mut out = Vec::with_capacity(64 + params.num_scalars() * 8);
    out.extend_from_slice(MAGIC);
    for v in [
        cfg.width,
        cfg.depth,
        cfg.n_blocks,
        cfg.length,
        cfg.keypoints,
        cfg.kernel_size,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Truncated(format!("weight file ends at byte {}", self.bytes.len())))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<(Parameters, ModelConfig)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(Error::Weights("bad magic; not a weight file".into()));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let cfg = ModelConfig {
        width: dims[0],
        depth: dims[1],
        n_blocks: dims[2],
        length: dims[3],
        keypoints: dims[4],
        kernel_size: dims[5],
    };
    cfg.validate()
        .map_err(|e| Error::Weights(format!("invalid stored config: {e}")))?;
    let count = r.u32()? as usize;
    let mut named = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Weights("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        if rank > 8 {
            return Err(Error::Weights(format!("tensor `{name}` has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Weights(format!("tensor `{name}` is too large")))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Weights("overflow".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        named.push((name, Tensor::from_vec(&shape, data)?));
    }
    if r.pos != bytes.len() {
        return Err(Error::Weights(format!(
            "{} trailing bytes after last tensor",
            bytes.len() - r.pos
        )));
    }
    let params =
        Parameters::from_named(&cfg, named).map_err(|e| Error::Weights(format!("config/tensor mismatch: {e}")))?;
    Ok((params, cfg))
}
