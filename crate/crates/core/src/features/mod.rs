//! Per-landmark feature extraction from grayscale images.

mod encoder;
mod image;
mod patch;

pub use encoder::{
    encode_patch_toy, features_for_sample, EncoderConfig, EncoderKind, ToyEncoder, POOL_GRID,
};
pub use image::{read_pgm, write_pgm, GrayImage};
pub use patch::{extract_patch, Patch};

/// Square patch sizes swept in the ablation protocol.
pub const DEFAULT_PATCH_GRID: [usize; 6] = [10, 20, 30, 50, 70, 90];
