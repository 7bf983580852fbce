use super::image::GrayImage;
use crate::error::{Error, Result};
use crate::graph::Point;

/// An `h x w` window cut around a landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
    center: Point,
}

impl Patch {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>, center: Point) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "patch size must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::DimensionMismatch {
                context: "patch pixel count",
                expected: height * width,
                found: pixels.len(),
            });
        }
        Ok(Patch {
            height,
            width,
            pixels,
            center,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// Pixel at row `r`, column `c`.
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.pixels[r * self.width + c]
    }
}

/// Cuts the `h x w` window whose top-left corner is the rounded center minus
/// `(w / 2, h / 2)`. Out-of-image pixels replicate the nearest edge pixel, so
/// the patch always has the requested shape.
pub fn extract_patch(image: &GrayImage, center: Point, h: usize, w: usize) -> Result<Patch> {
    if h == 0 || w == 0 {
        return Err(Error::invalid(format!(
            "patch size must be positive, got {h}x{w}"
        )));
    }
    if !center.x.is_finite() || !center.y.is_finite() {
        return Err(Error::invalid("patch center must be finite"));
    }
    let left = center.x.round() as i64 - (w / 2) as i64;
    let top = center.y.round() as i64 - (h / 2) as i64;
    let mut pixels = Vec::with_capacity(h * w);
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            pixels.push(image.get_clamped(left + c, top + r));
        }
    }
    Patch::new(h, w, pixels, center)
}
