//! Orthonormal 2-D sparsifying bases over column-stacked images.
//!
//! The full-image 2-D DCT is the default; the 2-D Haar wavelet (full
//! multilevel decomposition) is available for dyadic sizes. Both are
//! orthonormal, so synthesis is the transpose of analysis.

use crate::transform::Dct1d;
use crate::{Error, Result};

/// Sparsifying basis choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Dct2d,
    Haar2d,
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dct2d" | "dct" => Ok(BasisKind::Dct2d),
            "haar2d" | "haar" => Ok(BasisKind::Haar2d),
            other => Err(Error::invalid(format!(
                "unknown basis {other:?} (expected dct2d or haar2d)"
            ))),
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasisKind::Dct2d => "dct2d",
            BasisKind::Haar2d => "haar2d",
        })
    }
}

/// Direction of [`sparsify`]: analysis maps pixels to coefficients,
/// synthesis maps coefficients back to pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparsifyDirection {
    Analysis,
    Synthesis,
}

/// A prepared basis for an `height x width` image in column-stacked layout.
pub struct Basis2d {
    kind: BasisKind,
    height: usize,
    width: usize,
    dct_col: Option<Dct1d>,
    dct_row: Option<Dct1d>,
}

impl Basis2d {
    pub fn new(height: usize, width: usize, kind: BasisKind) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("basis dimensions must be positive"));
        }
        if kind == BasisKind::Haar2d && !(height.is_power_of_two() && width.is_power_of_two()) {
            return Err(Error::invalid(format!(
                "Haar basis requires power-of-two dimensions, got {height}x{width}"
            )));
        }
        let (dct_col, dct_row) = match kind {
            BasisKind::Dct2d => (Some(Dct1d::new(height)), Some(Dct1d::new(width))),
            BasisKind::Haar2d => (None, None),
        };
        Ok(Basis2d {
            kind,
            height,
            width,
            dct_col,
            dct_row,
        })
    }

    pub fn signal_len(&self) -> usize {
        self.height * self.width
    }

    pub fn analysis(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply(x, SparsifyDirection::Analysis)
    }

    pub fn synthesis(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.apply(s, SparsifyDirection::Synthesis)
    }

    fn apply(&self, x: &[f64], direction: SparsifyDirection) -> Result<Vec<f64>> {
        if x.len() != self.signal_len() {
            return Err(Error::invalid(format!(
                "signal length {} does not match {}x{} basis",
                x.len(),
                self.height,
                self.width
            )));
        }
        let mut data = x.to_vec();
        match self.kind {
            BasisKind::Dct2d => self.dct2d(&mut data, direction),
            BasisKind::Haar2d => haar2d(&mut data, self.height, self.width, direction),
        }
        Ok(data)
    }

    /// Separable DCT: columns are contiguous in column-stacked layout, rows
    /// are strided by the height.
    fn dct2d(&self, data: &mut [f64], direction: SparsifyDirection) {
        let (h, w) = (self.height, self.width);
        let dct_col = self.dct_col.as_ref().unwrap();
        let dct_row = self.dct_row.as_ref().unwrap();
        let mut col_scratch = dct_col.make_scratch();
        for col in data.chunks_mut(h) {
            match direction {
                SparsifyDirection::Analysis => dct_col.forward(col, &mut col_scratch),
                SparsifyDirection::Synthesis => dct_col.inverse(col, &mut col_scratch),
            }
        }
        let mut row_scratch = dct_row.make_scratch();
        let mut row = vec![0.0; w];
        for r in 0..h {
            for c in 0..w {
                row[c] = data[c * h + r];
            }
            match direction {
                SparsifyDirection::Analysis => dct_row.forward(&mut row, &mut row_scratch),
                SparsifyDirection::Synthesis => dct_row.inverse(&mut row, &mut row_scratch),
            }
            for c in 0..w {
                data[c * h + r] = row[c];
            }
        }
    }
}

/// Full multilevel 2-D Haar transform (Mallat layout) on a column-stacked
/// image. Decomposition continues while both sides of the low-pass block
/// stay even, so a square power-of-two image reduces to a single scaling
/// coefficient.
fn haar2d(data: &mut [f64], height: usize, width: usize, direction: SparsifyDirection) {
    let mut sizes = Vec::new();
    let (mut h, mut w) = (height, width);
    while h >= 2 && w >= 2 {
        sizes.push((h, w));
        h /= 2;
        w /= 2;
    }
    match direction {
        SparsifyDirection::Analysis => {
            for &(ch, cw) in &sizes {
                haar_level(data, height, ch, cw, true);
            }
        }
        SparsifyDirection::Synthesis => {
            for &(ch, cw) in sizes.iter().rev() {
                haar_level(data, height, ch, cw, false);
            }
        }
    }
}

/// One Haar level over the top-left `ch x cw` block (columns then rows for
/// analysis, the exact reverse for synthesis).
fn haar_level(data: &mut [f64], stride: usize, ch: usize, cw: usize, forward: bool) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut buf = vec![0.0; ch.max(cw)];
    if forward {
        // columns
        for c in 0..cw {
            let col = &mut data[c * stride..c * stride + ch];
            for i in 0..ch / 2 {
                buf[i] = (col[2 * i] + col[2 * i + 1]) * s;
                buf[ch / 2 + i] = (col[2 * i] - col[2 * i + 1]) * s;
            }
            col.copy_from_slice(&buf[..ch]);
        }
        // rows
        for r in 0..ch {
            for c in 0..cw {
                buf[c] = data[c * stride + r];
            }
            let mut out = vec![0.0; cw];
            for i in 0..cw / 2 {
                out[i] = (buf[2 * i] + buf[2 * i + 1]) * s;
                out[cw / 2 + i] = (buf[2 * i] - buf[2 * i + 1]) * s;
            }
            for c in 0..cw {
                data[c * stride + r] = out[c];
            }
        }
    } else {
        // rows
        for r in 0..ch {
            for c in 0..cw {
                buf[c] = data[c * stride + r];
            }
            let mut out = vec![0.0; cw];
            for i in 0..cw / 2 {
                out[2 * i] = (buf[i] + buf[cw / 2 + i]) * s;
                out[2 * i + 1] = (buf[i] - buf[cw / 2 + i]) * s;
            }
            for c in 0..cw {
                data[c * stride + r] = out[c];
            }
        }
        // columns
        for c in 0..cw {
            let col = &mut data[c * stride..c * stride + ch];
            buf[..ch].copy_from_slice(col);
            for i in 0..ch / 2 {
                col[2 * i] = (buf[i] + buf[ch / 2 + i]) * s;
                col[2 * i + 1] = (buf[i] - buf[ch / 2 + i]) * s;
            }
        }
    }
}

/// One-shot orthonormal 2-D transform of a column-stacked image.
pub fn sparsify(
    x: &[f64],
    height: usize,
    width: usize,
    basis: BasisKind,
    direction: SparsifyDirection,
) -> Result<Vec<f64>> {
    Basis2d::new(height, width, basis)?.apply(x, direction)
}
