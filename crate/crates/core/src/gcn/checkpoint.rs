//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"EXPGCKPT"
//! 8       4     format version (u32, currently 1)
//! 12      4     header length H in bytes (u32)
//! 16      H     UTF-8 JSON header: {"config": ModelConfig, "tensors": [{"name", "rows", "cols"}]}
//! 16+H    ...   tensor payloads in header order, each rows*cols f64 values, row-major
//! ```
//!
//! Tensors are `layer0 .. layer{L-1}`, `head_weights` and `head_bias`
//! (stored as a single row). Values are written as raw IEEE-754 bits, so a
//! save/load round trip is exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{GcnModel, ModelConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EXPGCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    tensors: Vec<TensorHeader>,
}

pub fn to_bytes(model: &GcnModel) -> Vec<u8> {
    let mut tensors: Vec<(String, usize, usize, &[f64])> = model
        .layer_weights()
        .iter()
        .enumerate()
        .map(|(l, w)| {
            (
                format!("layer{l}"),
                w.nrows(),
                w.ncols(),
                w.as_slice().expect("standard layout"),
            )
        })
        .collect();
    let head = model.head_weights();
    tensors.push((
        "head_weights".into(),
        head.nrows(),
        head.ncols(),
        head.as_slice().expect("standard layout"),
    ));
    let bias = model.head_bias();
    tensors.push((
        "head_bias".into(),
        1,
        bias.len(),
        bias.as_slice().expect("standard layout"),
    ));

    let header = Header {
        config: *model.config(),
        tensors: tensors
            .iter()
            .map(|(name, rows, cols, _)| TensorHeader {
                name: name.clone(),
                rows: *rows,
                cols: *cols,
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + model.parameter_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, _, _, values) in &tensors {
        for v in *values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> std::result::Result<GcnModel, String> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err("not a model checkpoint (bad magic)".into());
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let header_end = 16 + header_len;
    if bytes.len() < header_end {
        return Err("truncated checkpoint header".into());
    }
    let header: Header =
        serde_json::from_slice(&bytes[16..header_end]).map_err(|e| format!("bad header: {e}"))?;

    let mut cursor = header_end;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for t in &header.tensors {
        let count = t.rows * t.cols;
        let end = cursor + count * 8;
        if bytes.len() < end {
            return Err(format!("truncated payload for tensor `{}`", t.name));
        }
        let values: Vec<f64> = bytes[cursor..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        cursor = end;
        tensors.push((
            t.name.as_str(),
            Array2::from_shape_vec((t.rows, t.cols), values).unwrap(),
        ));
    }
    if cursor != bytes.len() {
        return Err(format!(
            "{} trailing bytes after payload",
            bytes.len() - cursor
        ));
    }

    let layers = header.config.layers;
    if tensors.len() != layers + 2 {
        return Err(format!(
            "expected {} tensors, found {}",
            layers + 2,
            tensors.len()
        ));
    }
    for (l, (name, _)) in tensors.iter().take(layers).enumerate() {
        if *name != format!("layer{l}") {
            return Err(format!("unexpected tensor `{name}` at position {l}"));
        }
    }
    let (bias_name, bias) = tensors.pop().unwrap();
    let (head_name, head) = tensors.pop().unwrap();
    if head_name != "head_weights" || bias_name != "head_bias" || bias.nrows() != 1 {
        return Err("checkpoint is missing the classifier head".into());
    }
    let layer_weights = tensors.into_iter().map(|(_, w)| w).collect();
    let bias = Array1::from(bias.into_raw_vec_and_offset().0);
    GcnModel::from_parts(header.config, layer_weights, head, bias).map_err(|e| e.to_string())
}

pub fn save(model: &GcnModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<GcnModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes).map_err(|msg| Error::parse(path, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> GcnModel {
        let config = ModelConfig {
            input_dim: 5,
            hidden_dim: 7,
            layers: 3,
            classes: 4,
            ..ModelConfig::default()
        };
        GcnModel::init(config, &mut ChaCha8Rng::seed_from_u64(3)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let back = from_bytes(&to_bytes(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_bytes(&back), to_bytes(&m));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = to_bytes(&model());
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(from_bytes(&bad_magic).is_err());
        let mut bad_version = bytes;
        bad_version[8] = 9;
        assert!(from_bytes(&bad_version).is_err());
    }
}
