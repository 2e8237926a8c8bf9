//! Structurally random sensing operator.
//!
//! The operator is the composition `sqrt(N/M) * D * F * R`: a keyed
//! pre-randomizer `R` (full permutation or Bernoulli sign flips), a
//! block-diagonal orthogonal transform `F` (DCT-II or Walsh-Hadamard per
//! block), and a uniform down-sampler `D` keeping `M` of `N` coefficients.
//! Everything is applied matrix-free; `materialize` exists for desk-scale
//! tests and the attack harness only.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::keyrng::{derive_streams, Keystream, Permutation, SecretKey};
use crate::transform::{fwht, Dct1d};
use crate::{Error, Result};

/// Block transform choice for `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Dct,
    Wht,
}

/// Pre-randomizer choice for `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomizerKind {
    /// Row `i` of `R` selects source entry `tau(i)`.
    Permutation,
    /// Diagonal sign flips `(-1)^(tau(i) mod 2)`.
    BernoulliSign,
}

impl TransformKind {
    pub fn id(self) -> u8 {
        match self {
            TransformKind::Dct => 0,
            TransformKind::Wht => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(TransformKind::Dct),
            1 => Ok(TransformKind::Wht),
            other => Err(Error::format(format!("unknown transform id {other}"))),
        }
    }
}

impl RandomizerKind {
    pub fn id(self) -> u8 {
        match self {
            RandomizerKind::Permutation => 0,
            RandomizerKind::BernoulliSign => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(RandomizerKind::Permutation),
            1 => Ok(RandomizerKind::BernoulliSign),
            other => Err(Error::format(format!("unknown randomizer id {other}"))),
        }
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(TransformKind::Dct),
            "wht" => Ok(TransformKind::Wht),
            other => Err(Error::invalid(format!(
                "unknown transform {other:?} (expected dct or wht)"
            ))),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Dct => "dct",
            TransformKind::Wht => "wht",
        })
    }
}

impl FromStr for RandomizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perm" | "permutation" => Ok(RandomizerKind::Permutation),
            "sign" | "bernoulli" => Ok(RandomizerKind::BernoulliSign),
            other => Err(Error::invalid(format!(
                "unknown randomizer {other:?} (expected perm or sign)"
            ))),
        }
    }
}

impl fmt::Display for RandomizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RandomizerKind::Permutation => "perm",
            RandomizerKind::BernoulliSign => "sign",
        })
    }
}

/// Transform direction for [`block_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformDirection {
    Forward,
    Inverse,
}

/// Dimensions and knobs of one sensing instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SensingConfig {
    height: usize,
    width: usize,
    block_size: usize,
    measurements: usize,
    transform: TransformKind,
    randomizer: RandomizerKind,
}

impl SensingConfig {
    pub fn new(
        height: usize,
        width: usize,
        block_size: usize,
        measurements: usize,
        transform: TransformKind,
        randomizer: RandomizerKind,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let n = height
            .checked_mul(width)
            .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
        if block_size == 0 || n % block_size != 0 {
            return Err(Error::invalid(format!(
                "block size {block_size} must divide the signal length {n}"
            )));
        }
        if measurements == 0 || measurements > n {
            return Err(Error::invalid(format!(
                "measurement count {measurements} must be in [1, {n}]"
            )));
        }
        if transform == TransformKind::Wht && !block_size.is_power_of_two() {
            return Err(Error::invalid(format!(
                "WHT requires a power-of-two block size, got {block_size}"
            )));
        }
        Ok(SensingConfig {
            height,
            width,
            block_size,
            measurements,
            transform,
            randomizer,
        })
    }

    /// Convenience constructor taking a sampling rate; `M = round(SR * N)`,
    /// clamped to `[1, N]`.
    pub fn with_sampling_rate(
        height: usize,
        width: usize,
        block_size: usize,
        sampling_rate: f64,
        transform: TransformKind,
        randomizer: RandomizerKind,
    ) -> Result<Self> {
        if !(sampling_rate > 0.0 && sampling_rate <= 1.0) {
            return Err(Error::invalid(format!(
                "sampling rate {sampling_rate} must be in (0, 1]"
            )));
        }
        let n = height
            .checked_mul(width)
            .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
        let m = ((sampling_rate * n as f64).round() as usize).clamp(1, n.max(1));
        Self::new(height, width, block_size, m, transform, randomizer)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn signal_len(&self) -> usize {
        self.height * self.width
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    pub fn sampling_rate(&self) -> f64 {
        self.measurements as f64 / self.signal_len() as f64
    }

    pub fn transform(&self) -> TransformKind {
        self.transform
    }

    pub fn randomizer(&self) -> RandomizerKind {
        self.randomizer
    }
}

/// Applies the pre-randomizer: `out_i = x_{tau(i)}` for the permutation kind,
/// `out_i = (-1)^(tau(i) mod 2) * x_i` for Bernoulli sign flips.
pub fn apply_randomizer(x: &[f64], tau: &Permutation, kind: RandomizerKind) -> Result<Vec<f64>> {
    if x.len() != tau.len() {
        return Err(Error::invalid(format!(
            "signal length {} does not match permutation length {}",
            x.len(),
            tau.len()
        )));
    }
    let out = match kind {
        RandomizerKind::Permutation => (0..x.len()).map(|i| x[tau.source(i)]).collect(),
        RandomizerKind::BernoulliSign => x
            .iter()
            .enumerate()
            .map(|(i, &v)| if tau.values()[i] % 2 == 1 { -v } else { v })
            .collect(),
    };
    Ok(out)
}

/// Inverse (= transpose, both kinds are orthogonal) of [`apply_randomizer`].
pub fn invert_randomizer(x: &[f64], tau: &Permutation, kind: RandomizerKind) -> Result<Vec<f64>> {
    if x.len() != tau.len() {
        return Err(Error::invalid(format!(
            "signal length {} does not match permutation length {}",
            x.len(),
            tau.len()
        )));
    }
    match kind {
        RandomizerKind::Permutation => {
            let mut out = vec![0.0; x.len()];
            for (i, &v) in x.iter().enumerate() {
                out[tau.source(i)] = v;
            }
            Ok(out)
        }
        // Sign flips are their own inverse.
        RandomizerKind::BernoulliSign => apply_randomizer(x, tau, kind),
    }
}

/// Transforms each contiguous `block_size` chunk by the orthonormal DCT-II
/// (or its inverse DCT-III) or the orthonormal Walsh-Hadamard transform.
pub fn block_transform(
    x: &[f64],
    block_size: usize,
    kind: TransformKind,
    direction: TransformDirection,
) -> Result<Vec<f64>> {
    if block_size == 0 || x.len() % block_size != 0 {
        return Err(Error::invalid(format!(
            "block size {block_size} must divide the signal length {}",
            x.len()
        )));
    }
    if kind == TransformKind::Wht && !block_size.is_power_of_two() {
        return Err(Error::invalid(format!(
            "WHT requires a power-of-two block size, got {block_size}"
        )));
    }
    let mut out = x.to_vec();
    match kind {
        TransformKind::Dct => {
            let dct = Dct1d::new(block_size);
            let mut scratch = dct.make_scratch();
            for block in out.chunks_mut(block_size) {
                match direction {
                    TransformDirection::Forward => dct.forward(block, &mut scratch),
                    TransformDirection::Inverse => dct.inverse(block, &mut scratch),
                }
            }
        }
        // Orthonormal WHT is self-inverse, so direction does not matter.
        TransformKind::Wht => {
            for block in out.chunks_mut(block_size) {
                fwht(block);
            }
        }
    }
    Ok(out)
}

fn validate_downsampler(tau_d: &[u32], m: usize, n: usize) -> Result<()> {
    if tau_d.len() != m {
        return Err(Error::invalid(format!(
            "down-sampler has {} indices, expected {m}",
            tau_d.len()
        )));
    }
    if m > n {
        return Err(Error::invalid(format!("m={m} exceeds n={n}")));
    }
    let mut seen = vec![false; n];
    for &t in tau_d {
        if t == 0 || t as usize > n {
            return Err(Error::invalid(format!(
                "down-sampler index {t} out of range [1, {n}]"
            )));
        }
        if std::mem::replace(&mut seen[t as usize - 1], true) {
            return Err(Error::invalid(format!("duplicate down-sampler index {t}")));
        }
    }
    Ok(())
}

/// Keeps the `m` coefficients selected by `tau_d` (1-based), scaled by
/// `sqrt(n/m)`.
pub fn downsample_scale(z: &[f64], tau_d: &[u32], m: usize, n: usize) -> Result<Vec<f64>> {
    if z.len() != n {
        return Err(Error::invalid(format!(
            "signal length {} does not match n={n}",
            z.len()
        )));
    }
    validate_downsampler(tau_d, m, n)?;
    let scale = (n as f64 / m as f64).sqrt();
    Ok(tau_d.iter().map(|&t| scale * z[t as usize - 1]).collect())
}

/// Adjoint of [`downsample_scale`]: scatter with the same `sqrt(n/m)` scale,
/// zeros elsewhere.
pub fn upsample_scale(y: &[f64], tau_d: &[u32], n: usize) -> Result<Vec<f64>> {
    validate_downsampler(tau_d, y.len(), n)?;
    let scale = (n as f64 / y.len() as f64).sqrt();
    let mut out = vec![0.0; n];
    for (&t, &v) in tau_d.iter().zip(y) {
        out[t as usize - 1] = scale * v;
    }
    Ok(out)
}

/// The prepared sensing operator: streams derived once, transform plan
/// cached. All methods are pure; the operator is safe to share across
/// threads.
pub struct SensingOperator {
    cfg: SensingConfig,
    tau_r: Permutation,
    tau_d: Vec<u32>,
    keystream: Keystream,
    initial_error: f64,
    dct: Option<Dct1d>,
}

impl SensingOperator {
    /// Derives the streams for `cfg` from `key` and prepares the operator.
    pub fn new(cfg: &SensingConfig, key: &SecretKey) -> Result<Self> {
        let streams = derive_streams(key, cfg.signal_len(), cfg.measurements())?;
        Self::from_parts(
            cfg,
            streams.randomizer,
            streams.downsampler,
            streams.keystream,
            streams.initial_error,
        )
    }

    /// Builds the operator from explicit streams (tests, stubbed pipelines,
    /// and the split workflow where the randomizer is applied separately).
    pub fn from_parts(
        cfg: &SensingConfig,
        tau_r: Permutation,
        tau_d: Vec<u32>,
        keystream: Keystream,
        initial_error: f64,
    ) -> Result<Self> {
        let n = cfg.signal_len();
        if tau_r.len() != n {
            return Err(Error::invalid(format!(
                "randomizer permutation length {} does not match n={n}",
                tau_r.len()
            )));
        }
        validate_downsampler(&tau_d, cfg.measurements(), n)?;
        if keystream.len() != cfg.measurements() + 1 {
            return Err(Error::invalid(format!(
                "keystream length {} does not match m+1={}",
                keystream.len(),
                cfg.measurements() + 1
            )));
        }
        let dct = match cfg.transform() {
            TransformKind::Dct => Some(Dct1d::new(cfg.block_size())),
            TransformKind::Wht => None,
        };
        Ok(SensingOperator {
            cfg: *cfg,
            tau_r,
            tau_d,
            keystream,
            initial_error,
            dct,
        })
    }

    pub fn config(&self) -> &SensingConfig {
        &self.cfg
    }

    pub fn randomizer_perm(&self) -> &Permutation {
        &self.tau_r
    }

    pub fn downsampler(&self) -> &[u32] {
        &self.tau_d
    }

    pub fn keystream(&self) -> &Keystream {
        &self.keystream
    }

    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }

    fn blocks_forward(&self, data: &mut [f64]) {
        match &self.dct {
            Some(dct) => {
                let mut scratch = dct.make_scratch();
                for block in data.chunks_mut(self.cfg.block_size()) {
                    dct.forward(block, &mut scratch);
                }
            }
            None => {
                for block in data.chunks_mut(self.cfg.block_size()) {
                    fwht(block);
                }
            }
        }
    }

    fn blocks_inverse(&self, data: &mut [f64]) {
        match &self.dct {
            Some(dct) => {
                let mut scratch = dct.make_scratch();
                for block in data.chunks_mut(self.cfg.block_size()) {
                    dct.inverse(block, &mut scratch);
                }
            }
            None => {
                for block in data.chunks_mut(self.cfg.block_size()) {
                    fwht(block);
                }
            }
        }
    }

    /// `y = sqrt(N/M) D F R x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = apply_randomizer(x, &self.tau_r, self.cfg.randomizer())?;
        self.blocks_forward(&mut z);
        let m = self.cfg.measurements();
        let n = self.cfg.signal_len();
        let scale = (n as f64 / m as f64).sqrt();
        Ok(self.tau_d.iter().map(|&t| scale * z[t as usize - 1]).collect())
    }

    /// `x = R' F' D' y` with the same `sqrt(N/M)` scale (the transpose of
    /// [`Self::forward`]).
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let m = self.cfg.measurements();
        let n = self.cfg.signal_len();
        if y.len() != m {
            return Err(Error::invalid(format!(
                "measurement length {} does not match M={m}",
                y.len()
            )));
        }
        let scale = (n as f64 / m as f64).sqrt();
        let mut z = vec![0.0; n];
        for (&t, &v) in self.tau_d.iter().zip(y) {
            z[t as usize - 1] = scale * v;
        }
        self.blocks_inverse(&mut z);
        invert_randomizer(&z, &self.tau_r, self.cfg.randomizer())
    }

    /// Dense `M x N` matrix of the operator, built by sensing the standard
    /// basis. Desk-scale only; used by tests and the attack harness.
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let n = self.cfg.signal_len();
        let m = self.cfg.measurements();
        let mut phi = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.forward(&e)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                phi[(i, j)] = v;
            }
        }
        Ok(phi)
    }
}

/// One-shot sensing: `sqrt(N/M) D F R x` with streams derived from `key`.
pub fn sense(x: &[f64], cfg: &SensingConfig, key: &SecretKey) -> Result<Vec<f64>> {
    if x.len() != cfg.signal_len() {
        return Err(Error::invalid(format!(
            "signal length {} does not match config N={}",
            x.len(),
            cfg.signal_len()
        )));
    }
    SensingOperator::new(cfg, key)?.forward(x)
}

/// One-shot adjoint of [`sense`].
pub fn adjoint(y: &[f64], cfg: &SensingConfig, key: &SecretKey) -> Result<Vec<f64>> {
    SensingOperator::new(cfg, key)?.adjoint(y)
}

/// Affine normalization targeting the quantizer's linear range: three sample
/// standard deviations land at +-127.5. Returns `(y_norm, offset, scale)`
/// with `y_norm = (y - offset) * scale`. A zero-variance input gets
/// `scale = 1`.
pub fn normalize(y: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if y.len() < 2 {
        return Err(Error::invalid(format!(
            "normalization needs at least 2 samples, got {}",
            y.len()
        )));
    }
    let m = y.len() as f64;
    let offset = y.iter().sum::<f64>() / m;
    let var = y.iter().map(|v| (v - offset) * (v - offset)).sum::<f64>() / (m - 1.0);
    let sigma = var.sqrt();
    let scale = if sigma > 0.0 { 127.5 / (3.0 * sigma) } else { 1.0 };
    let y_norm = y.iter().map(|v| (v - offset) * scale).collect();
    Ok((y_norm, offset, scale))
}
