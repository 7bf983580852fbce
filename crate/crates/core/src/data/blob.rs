//! Feature blobs: a 16-byte header followed by `f32` values.
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"EXPF"
//! 4       4     version (u32 LE, currently 1)
//! 8       4     rows N (u32 LE)
//! 12      4     cols d (u32 LE)
//! 16      4*N*d row-major f32 LE values
//! ```

use ndarray::Array2;

pub const MAGIC: &[u8; 4] = b"EXPF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Encodes `values` as `f32`. Values that are not exactly representable in
/// single precision are rounded.
pub fn encode(values: &Array2<f64>) -> Vec<u8> {
    let (n, d) = values.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * d);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for &v in values.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Array2<f64>, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err("not a feature blob (bad magic)".into());
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(format!("unsupported feature blob version {version}"));
    }
    let (n, d) = (word(8) as usize, word(12) as usize);
    let expected = HEADER_LEN + 4 * n * d;
    if bytes.len() != expected {
        return Err(format!(
            "feature blob declares {n}x{d} but holds {} payload bytes",
            bytes.len() - HEADER_LEN
        ));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Array2::from_shape_vec((n, d), values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn header_layout() {
        let bytes = encode(&array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(&bytes[..4], b"EXPF");
        assert_eq!(bytes[4..8], 1u32.to_le_bytes());
        assert_eq!(bytes[8..12], 2u32.to_le_bytes());
        assert_eq!(bytes[12..16], 3u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(bytes[16..20], 1.0f32.to_le_bytes());
    }

    #[test]
    fn f32_values_round_trip_exactly() {
        let v = array![[0.1f32 as f64, -3.25], [1e-30f32 as f64, 7.0]];
        assert_eq!(decode(&encode(&v)).unwrap(), v);
    }

    #[test]
    fn rejects_malformed() {
        let bytes = encode(&array![[1.0]]);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"NOPE0000000000000000").is_err());
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(decode(&v2).is_err());
    }
}
