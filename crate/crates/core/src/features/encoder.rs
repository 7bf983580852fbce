use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::image::GrayImage;
use super::patch::{extract_patch, Patch};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, LandmarkSet};

/// Side length of the pooled grid fed to the projection.
pub const POOL_GRID: usize = 8;
const POOLED_LEN: usize = POOL_GRID * POOL_GRID;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Average-pool then random projection, computed in-process.
    ToyProjection,
    /// Features come precomputed from the dataset.
    ExternalFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub out_dim: usize,
    pub projection_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::ToyProjection,
            out_dim: 64,
            projection_seed: 1000,
        }
    }
}

/// Deterministic patch embedding: adaptive average pooling to an 8x8 grid,
/// intensities scaled to `[0, 1]`, then a fixed Gaussian random projection.
#[derive(Debug, Clone)]
pub struct ToyEncoder {
    projection: Array2<f64>,
}

impl ToyEncoder {
    pub fn new(config: &EncoderConfig) -> Result<Self> {
        if config.kind != EncoderKind::ToyProjection {
            return Err(Error::invalid("toy encoder requires kind = toy-projection"));
        }
        if config.out_dim == 0 {
            return Err(Error::invalid(
                "encoder output dimension must be at least 1",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.projection_seed);
        let scale = 1.0 / (POOLED_LEN as f64).sqrt();
        let projection = Array2::from_shape_simple_fn((config.out_dim, POOLED_LEN), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        Ok(ToyEncoder { projection })
    }

    pub fn out_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn encode(&self, patch: &Patch) -> Array1<f64> {
        let pooled = pool(patch);
        let mut out = Array1::zeros(self.out_dim());
        for (o, row) in out.iter_mut().zip(self.projection.rows()) {
            let mut acc = 0.0;
            for (w, x) in row.iter().zip(pooled.iter()) {
                acc += w * x;
            }
            *o = acc;
        }
        out
    }
}

/// Adaptive average pooling: output cell `r` covers input rows
/// `floor(r*h/8) .. ceil((r+1)*h/8)`, so every cell is non-empty.
fn pool(patch: &Patch) -> [f64; POOLED_LEN] {
    let (h, w) = (patch.height(), patch.width());
    let mut out = [0.0; POOLED_LEN];
    for r in 0..POOL_GRID {
        let (r0, r1) = (r * h / POOL_GRID, ((r + 1) * h).div_ceil(POOL_GRID));
        for c in 0..POOL_GRID {
            let (c0, c1) = (c * w / POOL_GRID, ((c + 1) * w).div_ceil(POOL_GRID));
            let mut sum = 0.0;
            for y in r0..r1 {
                for x in c0..c1 {
                    sum += f64::from(patch.get(y, x));
                }
            }
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            out[r * POOL_GRID + c] = sum / count / 255.0;
        }
    }
    out
}

/// One-shot helper that builds the projection and encodes a single patch.
pub fn encode_patch_toy(patch: &Patch, config: &EncoderConfig) -> Result<Array1<f64>> {
    Ok(ToyEncoder::new(config)?.encode(patch))
}

/// Row `i` is the encoding of the patch around landmark `i`.
pub fn features_for_sample(
    image: &GrayImage,
    landmarks: &LandmarkSet,
    h: usize,
    w: usize,
    encoder: &ToyEncoder,
) -> Result<FeatureMatrix> {
    let d = encoder.out_dim();
    let mut values = Array2::zeros((landmarks.len(), d));
    for (mut row, &point) in values.rows_mut().into_iter().zip(landmarks.points()) {
        let patch = extract_patch(image, point, h, w)?;
        row.assign(&encoder.encode(&patch));
    }
    FeatureMatrix::new(values)
}
