//! Binary checkpoint container.
//!
//! ```text
//! magic "FPCK" | u32 version | u32 meta length | meta JSON
//! u32 tensor count | per tensor: u32 name length, name, u32 rows, u32 cols,
//!                    u8 bytes per scalar (4 or 8), little-endian scalars
//! ```
//! All integers are little-endian.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, TrainConfig};
use crate::fgnn::{ModelConfig, ModelParams};
use crate::neural::{Scalar, Tensor};

const MAGIC: &[u8; 4] = b"FPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelParams<f32>,
    pub train: Option<TrainConfig>,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    model: ModelConfig,
    train: Option<TrainConfig>,
    epoch: usize,
    loss_history: Vec<f64>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PipelineError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| bad("truncated file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, PipelineError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn fresh(model: ModelParams<f32>) -> Self {
        Checkpoint { model, train: None, epoch: 0, loss_history: Vec::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = Meta { model: self.model.config, train: self.train, epoch: self.epoch, loss_history: self.loss_history.clone() };
        let json = serde_json::to_vec(&meta).expect("metadata serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(self.model.set.len() as u32).to_le_bytes());
        for (name, t) in self.model.set.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
            out.push(4);
            for v in t.data() {
                v.to_le_bytes_vec(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let len = r.u32()? as usize;
        let meta: Meta = serde_json::from_slice(r.take(len)?).map_err(|e| bad(format!("metadata: {e}")))?;
        let mut model = ModelParams::<f32>::init(meta.model, 0)?;
        let count = r.u32()? as usize;
        if count != model.set.len() {
            return Err(bad(format!("{count} tensors, configuration needs {}", model.set.len())));
        }
        for id in model.set.ids().collect::<Vec<_>>() {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| bad("tensor name is not UTF-8"))?;
            if name != model.set.name(id) {
                return Err(bad(format!("expected tensor {}, found {name}", model.set.name(id))));
            }
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if (rows, cols) != model.set.get(id).shape() {
                return Err(bad(format!("tensor {name} has shape {rows}x{cols}, expected {:?}", model.set.get(id).shape())));
            }
            let width = r.take(1)?[0] as usize;
            let raw = r.take(rows * cols * width)?;
            let data: Vec<f32> = match width {
                4 => raw.chunks_exact(4).map(f32::from_le_slice).collect(),
                8 => raw.chunks_exact(8).map(|c| f64::from_le_slice(c) as f32).collect(),
                w => return Err(bad(format!("unsupported scalar width {w}"))),
            };
            *model.set.get_mut(id) = Tensor::from_vec(rows, cols, data)?;
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint { model, train: meta.train, epoch: meta.epoch, loss_history: meta.loss_history })
    }

    /// SHA-256 of the serialized checkpoint, hex encoded.
    pub fn digest(&self) -> String {
        digest_bytes(&self.to_bytes())
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgnn::ModelConfig;

    fn small() -> Checkpoint {
        let cfg = ModelConfig { hidden: 8, iterations: 2, ..ModelConfig::default() };
        let mut c = Checkpoint::fresh(ModelParams::init(cfg, 5).unwrap());
        c.epoch = 3;
        c.loss_history = vec![0.3, 0.2, 0.1];
        c
    }

    #[test]
    fn round_trip() {
        let c = small();
        let bytes = c.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
        assert_eq!(c.digest(), digest_bytes(&bytes));
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn corruption_detected() {
        let bytes = small().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
        assert!(Checkpoint::from_bytes(b"").is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = small();
        let mut b = a.clone();
        let id = b.model.layout.readout.layers[1].bias;
        b.model.set.get_mut(id).data_mut()[0] = 0.5;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), small().digest());
    }
}
