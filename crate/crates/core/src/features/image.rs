//! 8-bit grayscale images and binary PGM (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "image pixel count",
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel at `(x, y)` with both coordinates clamped into the image.
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.get(cx, cy)
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_number(&mut self) -> Option<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

/// Decodes a binary 8-bit PGM held in memory.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut header = HeaderReader { bytes, pos: 2 };
    let width = header.next_number().ok_or("bad width")?;
    let height = header.next_number().ok_or("bad height")?;
    let maxval = header.next_number().ok_or("bad maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!(
            "unsupported maxval {maxval} (only 8-bit PGM is supported)"
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let raster = &bytes[header.pos..];
    let count = width * height;
    if raster.len() < count {
        return Err(format!(
            "raster truncated: expected {count} bytes, found {}",
            raster.len()
        ));
    }
    let mut pixels = raster[..count].to_vec();
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((*p as usize).min(maxval) * 255 / maxval) as u8;
        }
    }
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|msg| Error::parse(path, msg))
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_with_comments() {
        let mut bytes = b"P5\n# a comment\n3 2\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 2, 3, 4, 5]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.get(2, 1), 5);
    }

    #[test]
    fn round_trip() {
        let img = GrayImage::from_fn(7, 5, |x, y| (x * 31 + y * 7) as u8).unwrap();
        assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00\x01").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(GrayImage::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn low_maxval_is_rescaled() {
        let img = decode_pgm(b"P5 2 1 15\n\x00\x0f").unwrap();
        assert_eq!(img.pixels(), &[0, 255]);
    }
}
