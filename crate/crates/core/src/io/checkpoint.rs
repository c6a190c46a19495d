//! `CKP1` checkpoints: magic, model name (u32 LE length + UTF-8), tensor
//! count (u32 LE), then per tensor its rank, dims (u32 LE each) and values
//! (f64 LE).

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{ModelSpec, Network, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CKP1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_name: String,
    pub tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn from_network(net: &mut Network) -> Self {
        Self {
            model_name: net.spec().kind.name().to_string(),
            tensors: net.parameters(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(self.model_name.len() as u32).to_le_bytes());
        out.extend_from_slice(self.model_name.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let name_len = r.u32()? as usize;
        let model_name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::Format("checkpoint model name is not UTF-8".into()))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let len = shape.iter().product::<usize>();
            let data = r
                .take(len.checked_mul(8).ok_or_else(|| Error::Format("tensor too large".into()))?)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { model_name, tensors })
    }

    /// Loads the parameters into `net`, which must have the same architecture.
    pub fn restore(&self, net: &mut Network) -> Result<()> {
        let expect = net.spec().kind.name();
        if self.model_name != expect {
            return Err(Error::Shape(format!(
                "checkpoint holds a {} model, target is {expect}",
                self.model_name
            )));
        }
        net.set_parameters(&self.tensors)
    }
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
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn save_checkpoint(net: &mut Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, Checkpoint::from_network(net).encode()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    Checkpoint::decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Builds a network for `spec` and fills it from the checkpoint at `path`.
pub fn load_network(spec: &ModelSpec, path: impl AsRef<Path>) -> Result<Network> {
    let ckpt = load_checkpoint(path)?;
    let mut net = Network::new(spec, &mut ChaCha8Rng::seed_from_u64(0))?;
    ckpt.restore(&mut net)?;
    Ok(net)
}
