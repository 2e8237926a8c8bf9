//! The cipher package: the on-disk container for one encrypted sensing
//! result.
//!
//! Layout (all multi-byte integers little-endian):
//!
//! | field         | size | value                               |
//! |---------------|------|-------------------------------------|
//! | magic         | 4    | `"CSQD"`                            |
//! | version       | 1    | 1                                   |
//! | height        | 2    | image rows                          |
//! | width         | 2    | image columns                       |
//! | block_size    | 2    | transform block size B              |
//! | measurements  | 4    | M                                   |
//! | transform_id  | 1    | 0 = DCT, 1 = WHT                    |
//! | randomizer_id | 1    | 0 = permutation, 1 = Bernoulli sign |
//! | offset        | 8    | normalization offset (f64)          |
//! | scale         | 8    | normalization scale (f64, nonzero)  |
//! | payload       | M    | diffused bytes q*                   |
//!
//! Parsing is strict: bad magic or version, inconsistent dimensions, a
//! non-finite or zero scale, or a payload that is not exactly `M` bytes are
//! all format errors.

use std::fs;
use std::path::Path;

use crate::srm::{RandomizerKind, SensingConfig, TransformKind};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CSQD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 33;

/// Header plus diffused payload; always structurally valid once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherPackage {
    height: u16,
    width: u16,
    block_size: u16,
    transform: TransformKind,
    randomizer: RandomizerKind,
    offset: f64,
    scale: f64,
    payload: Vec<u8>,
}

impl CipherPackage {
    /// Packs an encoding result. `payload.len()` must equal
    /// `cfg.measurements()`, and the config dimensions must fit the 16-bit
    /// header fields.
    pub fn new(cfg: &SensingConfig, offset: f64, scale: f64, payload: Vec<u8>) -> Result<Self> {
        let h = u16::try_from(cfg.height())
            .map_err(|_| Error::invalid(format!("height {} exceeds u16", cfg.height())))?;
        let w = u16::try_from(cfg.width())
            .map_err(|_| Error::invalid(format!("width {} exceeds u16", cfg.width())))?;
        let b = u16::try_from(cfg.block_size())
            .map_err(|_| Error::invalid(format!("block size {} exceeds u16", cfg.block_size())))?;
        if payload.len() != cfg.measurements() {
            return Err(Error::invalid(format!(
                "payload has {} bytes, expected M={}",
                payload.len(),
                cfg.measurements()
            )));
        }
        if scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::invalid(format!(
                "bad normalization parameters offset={offset} scale={scale}"
            )));
        }
        Ok(CipherPackage {
            height: h,
            width: w,
            block_size: b,
            transform: cfg.transform(),
            randomizer: cfg.randomizer(),
            offset,
            scale,
            payload,
        })
    }

    pub fn height(&self) -> usize {
        usize::from(self.height)
    }

    pub fn width(&self) -> usize {
        usize::from(self.width)
    }

    pub fn block_size(&self) -> usize {
        usize::from(self.block_size)
    }

    pub fn measurements(&self) -> usize {
        self.payload.len()
    }

    pub fn signal_len(&self) -> usize {
        self.height() * self.width()
    }

    pub fn transform(&self) -> TransformKind {
        self.transform
    }

    pub fn randomizer(&self) -> RandomizerKind {
        self.randomizer
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// The sensing configuration implied by the header.
    pub fn sensing_config(&self) -> Result<SensingConfig> {
        SensingConfig::new(
            self.height(),
            self.width(),
            self.block_size(),
            self.measurements(),
            self.transform,
            self.randomizer,
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.block_size.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.push(self.transform.id());
        out.push(self.randomizer.id());
        out.extend_from_slice(&self.offset.to_le_bytes());
        out.extend_from_slice(&self.scale.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < HEADER_LEN {
            return Err(Error::format(format!(
                "package truncated: {} bytes, header needs {HEADER_LEN}",
                data.len()
            )));
        }
        if data[..4] != MAGIC {
            return Err(Error::format("bad package magic"));
        }
        if data[4] != VERSION {
            return Err(Error::format(format!(
                "unsupported package version {}",
                data[4]
            )));
        }
        let height = u16::from_le_bytes([data[5], data[6]]);
        let width = u16::from_le_bytes([data[7], data[8]]);
        let block_size = u16::from_le_bytes([data[9], data[10]]);
        let m = u32::from_le_bytes([data[11], data[12], data[13], data[14]]) as usize;
        let transform = TransformKind::from_id(data[15])?;
        let randomizer = RandomizerKind::from_id(data[16])?;
        let offset = f64::from_le_bytes(data[17..25].try_into().unwrap());
        let scale = f64::from_le_bytes(data[25..33].try_into().unwrap());

        if m == 0 {
            return Err(Error::format("package declares zero measurements"));
        }
        let payload = &data[HEADER_LEN..];
        if payload.len() != m {
            return Err(Error::format(format!(
                "payload has {} bytes, header declares {m}",
                payload.len()
            )));
        }
        if scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::format(format!(
                "bad normalization parameters offset={offset} scale={scale}"
            )));
        }
        // Full config validation (divisibility, M <= N, WHT power-of-two):
        // a package that can never decode is a format error at parse time.
        let cfg = SensingConfig::new(
            usize::from(height),
            usize::from(width),
            usize::from(block_size),
            m,
            transform,
            randomizer,
        )
        .map_err(|e| Error::format(format!("inconsistent package header: {e}")))?;

        CipherPackage::new(&cfg, offset, scale, payload.to_vec())
            .map_err(|e| Error::format(format!("inconsistent package: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cfg() -> SensingConfig {
        SensingConfig::new(
            4,
            4,
            8,
            10,
            TransformKind::Dct,
            RandomizerKind::Permutation,
        )
        .unwrap()
    }

    #[test]
    fn roundtrip() {
        let pkg = CipherPackage::new(&sample_cfg(), -1.5, 0.25, (0..10).collect()).unwrap();
        let bytes = pkg.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 10);
        let back = CipherPackage::from_bytes(&bytes).unwrap();
        assert_eq!(pkg, back);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let pkg = CipherPackage::new(&sample_cfg(), 0.0, 1.0, vec![0; 10]).unwrap();
        let mut bytes = pkg.to_bytes();
        bytes[0] = b'X';
        assert!(CipherPackage::from_bytes(&bytes).is_err());
        let mut bytes = pkg.to_bytes();
        bytes[4] = 9;
        assert!(CipherPackage::from_bytes(&bytes).is_err());
    }

    #[test]
    fn rejects_truncation_and_trailing() {
        let pkg = CipherPackage::new(&sample_cfg(), 0.0, 1.0, vec![7; 10]).unwrap();
        let bytes = pkg.to_bytes();
        assert!(CipherPackage::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(CipherPackage::from_bytes(&bytes[..10]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(CipherPackage::from_bytes(&longer).is_err());
    }

    #[test]
    fn rejects_inconsistent_header() {
        let pkg = CipherPackage::new(&sample_cfg(), 0.0, 1.0, vec![7; 10]).unwrap();
        // M > N
        let mut bytes = pkg.to_bytes();
        bytes[11..15].copy_from_slice(&100u32.to_le_bytes());
        assert!(CipherPackage::from_bytes(&bytes).is_err());
        // block size does not divide N
        let mut bytes = pkg.to_bytes();
        bytes[9..11].copy_from_slice(&3u16.to_le_bytes());
        assert!(CipherPackage::from_bytes(&bytes).is_err());
        // zero scale
        let mut bytes = pkg.to_bytes();
        bytes[25..33].copy_from_slice(&0.0f64.to_le_bytes());
        assert!(CipherPackage::from_bytes(&bytes).is_err());
        // NaN offset
        let mut bytes = pkg.to_bytes();
        bytes[17..25].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(CipherPackage::from_bytes(&bytes).is_err());
    }

    #[test]
    fn rejects_oversized_config() {
        let cfg = SensingConfig::new(
            70000,
            1,
            1,
            5,
            TransformKind::Dct,
            RandomizerKind::Permutation,
        )
        .unwrap();
        assert!(CipherPackage::new(&cfg, 0.0, 1.0, vec![0; 5]).is_err());
    }
}
