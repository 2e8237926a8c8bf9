//! Keyed deterministic randomness.
//!
//! Everything random in the scheme (the pre-randomizer permutation, the
//! down-sampling index set, the diffusion keystream, and the initial
//! quantizer error) is derived from a single 128-bit key through one
//! generator so that encoder and decoder reproduce identical streams.
//!
//! The generator is ChaCha20 keyed with the 128-bit secret doubled into the
//! 256-bit seed slot, zero nonce, consumed as little-endian 64-bit words.
//! Integer draws use rejection sampling so there is no modulo bias; the whole
//! construction is pinned by golden vectors in the test suite.

use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::{Error, Result};

/// 128-bit secret key seeding every random artifact of the scheme.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SecretKey([u8; 16]);

impl SecretKey {
    pub const LEN: usize = 16;

    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        SecretKey(bytes)
    }

    /// Parses a key from 32 hex characters.
    pub fn from_hex(hex: &str) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != 2 * Self::LEN {
            return Err(Error::format(format!(
                "key must be {} hex characters, got {}",
                2 * Self::LEN,
                hex.len()
            )));
        }
        let mut bytes = [0u8; Self::LEN];
        for (i, chunk) in hex.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(chunk)
                .map_err(|_| Error::format("key contains non-ascii bytes"))?;
            bytes[i] = u8::from_str_radix(s, 16)
                .map_err(|_| Error::format(format!("invalid hex byte {s:?} in key")))?;
        }
        Ok(SecretKey(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Expands a 64-bit seed into a key; handy for demos and harnesses where
    /// the key itself is not under test.
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        SecretKey(bytes)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({})", self.to_hex())
    }
}

/// Stream state: the keyed generator plus the number of words drawn so far.
///
/// The state is fully determined by `(SecretKey, draw_count)`; drawing is the
/// only mutation. It is deliberately not `Clone` so a stream cannot be forked
/// by accident.
pub struct RngState {
    rng: ChaCha20Rng,
    draws: u64,
}

impl RngState {
    /// Number of 64-bit words consumed since seeding.
    pub fn draw_count(&self) -> u64 {
        self.draws
    }

    fn next_word(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }
}

/// Seeds the generator. Identical keys yield identical draw sequences.
pub fn seed_rng(key: &SecretKey) -> RngState {
    let mut seed = [0u8; 32];
    seed[..16].copy_from_slice(key.as_bytes());
    seed[16..].copy_from_slice(key.as_bytes());
    RngState {
        rng: ChaCha20Rng::from_seed(seed),
        draws: 0,
    }
}

/// Draws a uniform integer in `[lo, hi]`, inclusive.
///
/// Rejection sampling over the raw 64-bit words: a word is accepted only if
/// it falls in the largest prefix-aligned multiple of the range size, so
/// every value in `[lo, hi]` is exactly equally likely. Rejected words still
/// advance the state.
pub fn next_uniform(state: &mut RngState, lo: u32, hi: u32) -> Result<u32> {
    if lo > hi {
        return Err(Error::invalid(format!("empty range [{lo}, {hi}]")));
    }
    let range = u64::from(hi - lo) + 1;
    // (2^64 - range) mod range; words below this would bias the reduction.
    let cutoff = range.wrapping_neg() % range;
    loop {
        let word = state.next_word();
        if word >= cutoff {
            return Ok(lo + (word % range) as u32);
        }
    }
}

/// A bijection tau on `{1..n}`, stored as 1-based values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    tau: Vec<u32>,
}

impl Permutation {
    /// Validates that `tau` is a bijection on `{1..tau.len()}`.
    pub fn try_new(tau: Vec<u32>) -> Result<Self> {
        let n = tau.len();
        let mut seen = vec![false; n];
        for &t in &tau {
            if t == 0 || t as usize > n {
                return Err(Error::invalid(format!(
                    "permutation entry {t} out of range [1, {n}]"
                )));
            }
            if std::mem::replace(&mut seen[t as usize - 1], true) {
                return Err(Error::invalid(format!("duplicate permutation entry {t}")));
            }
        }
        Ok(Permutation { tau })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            tau: (1..=n as u32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// The raw 1-based values tau(1), ..., tau(n).
    pub fn values(&self) -> &[u32] {
        &self.tau
    }

    /// 0-based source index for output position `i`: applying the
    /// permutation reads `x[perm.source(i)]` into position `i`.
    #[inline]
    pub fn source(&self, i: usize) -> usize {
        self.tau[i] as usize - 1
    }
}

/// Key stream bytes `v_0..v_m` used by diffusion (`m + 1` bytes for `m`
/// measurements; `v_0` seeds the chain).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Keystream {
    v: Vec<u8>,
}

impl Keystream {
    pub fn from_bytes(v: Vec<u8>) -> Self {
        Keystream { v }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// All streams the scheme derives from one key for a given problem size.
#[derive(Clone, Debug)]
pub struct DerivedStreams {
    /// Full permutation of `[1..n]` driving the pre-randomizer.
    pub randomizer: Permutation,
    /// `m` distinct 1-based indices in `[1..n]` selecting the kept
    /// measurements.
    pub downsampler: Vec<u32>,
    /// `m + 1` keystream bytes for diffusion.
    pub keystream: Keystream,
    /// Initial quantizer error, `v_0 / 256 - 0.5`, in `[-0.5, 0.5)`.
    pub initial_error: f64,
}

/// Fisher-Yates shuffle: `n` swaps, each drawing `j` in `[i, n]`, including
/// the final degenerate draw at `i = n`. Consumes exactly `n` draws.
pub fn fisher_yates(state: &mut RngState, n: usize) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::invalid("permutation length must be at least 1"));
    }
    fisher_yates_with(n, |lo, hi| next_uniform(state, lo, hi))
}

/// Shuffle driven by an arbitrary draw source; `draw(lo, hi)` must return a
/// value in `[lo, hi]` (1-based). Split out so tests can stub the draws.
fn fisher_yates_with(
    n: usize,
    mut draw: impl FnMut(u32, u32) -> Result<u32>,
) -> Result<Permutation> {
    let mut tau: Vec<u32> = (1..=n as u32).collect();
    for i in 0..n {
        let j = draw(i as u32 + 1, n as u32)? as usize;
        tau.swap(i, j - 1);
    }
    Ok(Permutation { tau })
}

/// Derives the randomizer permutation, down-sampler indices, keystream, and
/// initial quantizer error for an `n`-sample signal with `m` measurements.
///
/// Draw budget: `n` for the randomizer, `m` for the down-sampler (a partial
/// shuffle over a fresh identity array yields `m` distinct uniform indices
/// with exactly `m` draws), and `m + 1` for the keystream, which is raw
/// uniform draws over `[1, n]` reduced mod 256.
pub fn derive_streams(key: &SecretKey, n: usize, m: usize) -> Result<DerivedStreams> {
    let mut state = seed_rng(key);
    derive_streams_from(&mut state, n, m)
}

fn derive_streams_from(state: &mut RngState, n: usize, m: usize) -> Result<DerivedStreams> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "measurement count m={m} must satisfy 1 <= m <= n={n}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid(format!("signal length {n} exceeds u32")));
    }
    let randomizer = fisher_yates(state, n)?;

    // Partial Fisher-Yates pass: the first m entries after m swaps are m
    // distinct uniform indices.
    let mut tau: Vec<u32> = (1..=n as u32).collect();
    for i in 0..m {
        let j = next_uniform(state, i as u32 + 1, n as u32)? as usize;
        tau.swap(i, j - 1);
    }
    tau.truncate(m);
    let downsampler = tau;

    let mut v = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        v.push((next_uniform(state, 1, n as u32)? % 256) as u8);
    }
    let initial_error = f64::from(v[0]) / 256.0 - 0.5;

    Ok(DerivedStreams {
        randomizer,
        downsampler,
        keystream: Keystream::from_bytes(v),
        initial_error,
    })
}
