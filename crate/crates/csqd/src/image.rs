//! 8-bit grayscale images and binary PGM (P5) I/O.
//!
//! PGM is the only on-disk image format: a two-byte magic, whitespace- and
//! comment-separated ASCII header (width, height, maxval), one whitespace
//! byte, then the raster. The parser is strict — the raster must hold
//! exactly `width * height` bytes — and never allocates more than the input
//! it was handed, so it is safe on untrusted data.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let n = height
            .checked_mul(width)
            .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
        if pixels.len() != n {
            return Err(Error::invalid(format!(
                "pixel buffer has {} bytes, expected {n}",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            height,
            width,
            pixels,
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

    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Column-stacked real vector: entry `c * H + r` is pixel `(r, c)`.
    pub fn to_signal(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                x.push(f64::from(self.pixel(r, c)));
            }
        }
        x
    }

    /// Inverse of [`Self::to_signal`]: rounds and clamps to `[0, 255]`.
    pub fn from_signal(height: usize, width: usize, signal: &[f64]) -> Result<Self> {
        if signal.len() != height * width {
            return Err(Error::invalid(format!(
                "signal length {} does not match {height}x{width}",
                signal.len()
            )));
        }
        let mut pixels = vec![0u8; signal.len()];
        for c in 0..width {
            for r in 0..height {
                let v = signal[c * height + r];
                pixels[r * width + c] = if v.is_nan() { 0 } else { v.round().clamp(0.0, 255.0) as u8 };
            }
        }
        GrayImage::new(height, width, pixels)
    }

    /// Column-stacked pixel bytes (same layout as [`Self::to_signal`]).
    pub fn column_stacked(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len());
        for c in 0..self.width {
            for r in 0..self.height {
                out.push(self.pixel(r, c));
            }
        }
        out
    }

    /// Rebuilds an image from column-stacked bytes.
    pub fn from_column_stacked(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != height * width {
            return Err(Error::invalid(format!(
                "byte buffer has {} entries, expected {}",
                bytes.len(),
                height * width
            )));
        }
        let mut pixels = vec![0u8; bytes.len()];
        for c in 0..width {
            for r in 0..height {
                pixels[r * width + c] = bytes[c * height + r];
            }
        }
        GrayImage::new(height, width, pixels)
    }

    /// Parses a binary PGM (P5) image.
    pub fn from_pgm_bytes(data: &[u8]) -> Result<Self> {
        let mut p = PgmParser { data, pos: 0 };
        p.expect_magic()?;
        let width = p.next_number()?;
        let height = p.next_number()?;
        let maxval = p.next_number()?;
        if !(1..=255).contains(&maxval) {
            return Err(Error::format(format!(
                "unsupported PGM maxval {maxval} (need 1..=255)"
            )));
        }
        p.single_whitespace()?;
        let n = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| Error::format("PGM dimensions overflow"))?;
        if width == 0 || height == 0 {
            return Err(Error::format("PGM dimensions must be positive"));
        }
        let raster = &p.data[p.pos..];
        if raster.len() != n {
            return Err(Error::format(format!(
                "PGM raster has {} bytes, expected {n}",
                raster.len()
            )));
        }
        GrayImage::new(height as usize, width as usize, raster.to_vec())
    }

    /// Serializes as binary PGM (P5) with maxval 255.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pgm_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pgm_bytes())?;
        Ok(())
    }

    /// Deterministic smooth test scene: gradient background, a few shaded
    /// blobs, and a soft disk. Compressible like a natural photograph, so it
    /// works as reconstruction and statistics input without shipping image
    /// assets. The variant selects blob geometry.
    pub fn test_pattern(height: usize, width: usize, variant: u64) -> Self {
        let mut mix = variant.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let mut knob = || {
            mix ^= mix << 13;
            mix ^= mix >> 7;
            mix ^= mix << 17;
            (mix >> 11) as f64 / (1u64 << 53) as f64
        };
        let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    0.15 + 0.7 * knob(),  // center y
                    0.15 + 0.7 * knob(),  // center x
                    0.05 + 0.18 * knob(), // radius
                    40.0 + 120.0 * knob(), // amplitude
                )
            })
            .collect();
        let (gy, gx) = (30.0 + 40.0 * knob(), 20.0 + 30.0 * knob());
        let base = 60.0 + 60.0 * knob();
        let mut pixels = vec![0u8; height * width];
        for r in 0..height {
            for c in 0..width {
                let y = r as f64 / height as f64;
                let x = c as f64 / width as f64;
                let mut v = base + gy * y + gx * x;
                for &(cy, cx, rad, amp) in &blobs {
                    let d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    v += amp * (-d2 / (2.0 * rad * rad)).exp();
                }
                // soft-edged disk
                let d = ((y - 0.5) * (y - 0.5) + (x - 0.5) * (x - 0.5)).sqrt();
                v += 35.0 / (1.0 + ((d - 0.22) * 40.0).exp());
                pixels[r * width + c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
        GrayImage {
            height,
            width,
            pixels,
        }
    }
}

struct PgmParser<'a> {
    data: &'a [u8],
    pos: usize,
}

impl PgmParser<'_> {
    fn expect_magic(&mut self) -> Result<()> {
        if self.data.len() < 2 || &self.data[..2] != b"P5" {
            return Err(Error::format("not a binary PGM (missing P5 magic)"));
        }
        self.pos = 2;
        Ok(())
    }

    /// Skips whitespace and '#' comments that run to end of line.
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next_number(&mut self) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            value = value * 10 + u64::from(self.data[self.pos] - b'0');
            if value > u64::from(u32::MAX) {
                return Err(Error::format("PGM header number overflows"));
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format("PGM header truncated or non-numeric"));
        }
        Ok(value as u32)
    }

    /// Exactly one whitespace byte separates the maxval from the raster.
    fn single_whitespace(&mut self) -> Result<()> {
        match self.data.get(self.pos) {
            Some(b' ' | b'\t' | b'\r' | b'\n') => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::format("PGM raster separator missing")),
        }
    }
}
