//! Fast orthonormal 1-D transform kernels shared by the sensing operator and
//! the sparsifying bases.
//!
//! The DCT-II/III pair is computed through a single complex FFT of the same
//! length (even/odd interleaving plus a quarter-sample twiddle), which keeps
//! the per-block cost at O(B log B). Correctness is pinned against the direct
//! O(B^2) definition in the tests.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Orthonormal DCT-II (forward) / DCT-III (inverse) of a fixed length.
pub(crate) struct Dct1d {
    n: usize,
    forward_fft: Arc<dyn Fft<f64>>,
    inverse_fft: Arc<dyn Fft<f64>>,
    /// exp(-i pi k / (2n)) for k = 0..n
    twiddle: Vec<Complex<f64>>,
    scale_dc: f64,
    scale_ac: f64,
}

impl Dct1d {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut planner = FftPlanner::new();
        let forward_fft = planner.plan_fft_forward(n);
        let inverse_fft = planner.plan_fft_inverse(n);
        let twiddle = (0..n)
            .map(|k| {
                let theta = -std::f64::consts::PI * k as f64 / (2.0 * n as f64);
                Complex::new(theta.cos(), theta.sin())
            })
            .collect();
        Dct1d {
            n,
            forward_fft,
            inverse_fft,
            twiddle,
            scale_dc: 1.0 / (n as f64).sqrt(),
            scale_ac: (2.0 / n as f64).sqrt(),
        }
    }

    fn scratch_len(&self) -> usize {
        self.forward_fft
            .get_inplace_scratch_len()
            .max(self.inverse_fft.get_inplace_scratch_len())
    }

    /// Scratch buffers reusable across blocks of one signal.
    pub fn make_scratch(&self) -> DctScratch {
        DctScratch {
            buf: vec![Complex::new(0.0, 0.0); self.n],
            fft: vec![Complex::new(0.0, 0.0); self.scratch_len()],
        }
    }

    /// In-place orthonormal DCT-II of one block.
    pub fn forward(&self, block: &mut [f64], scratch: &mut DctScratch) {
        let n = self.n;
        debug_assert_eq!(block.len(), n);
        if n == 1 {
            return;
        }
        // Even samples ascending, odd samples descending.
        let half = n.div_ceil(2);
        for i in 0..half {
            scratch.buf[i] = Complex::new(block[2 * i], 0.0);
        }
        for i in 0..n / 2 {
            scratch.buf[n - 1 - i] = Complex::new(block[2 * i + 1], 0.0);
        }
        self.forward_fft
            .process_with_scratch(&mut scratch.buf, &mut scratch.fft);
        for k in 0..n {
            let c = (scratch.buf[k] * self.twiddle[k]).re;
            block[k] = c * if k == 0 { self.scale_dc } else { self.scale_ac };
        }
    }

    /// In-place orthonormal DCT-III (the inverse of [`Self::forward`]).
    pub fn inverse(&self, block: &mut [f64], scratch: &mut DctScratch) {
        let n = self.n;
        debug_assert_eq!(block.len(), n);
        if n == 1 {
            return;
        }
        // Undo the orthonormal scaling, rebuild the half-sample spectrum
        // V[k] = conj(twiddle[k]) * (C[k] - i C[n-k]), then invert the FFT.
        let c0 = block[0] / self.scale_dc;
        scratch.buf[0] = Complex::new(c0, 0.0);
        for k in 1..n {
            let ck = block[k] / self.scale_ac;
            let cnk = block[n - k] / self.scale_ac;
            scratch.buf[k] = self.twiddle[k].conj() * Complex::new(ck, -cnk);
        }
        self.inverse_fft
            .process_with_scratch(&mut scratch.buf, &mut scratch.fft);
        let inv_n = 1.0 / n as f64;
        let half = n.div_ceil(2);
        for i in 0..half {
            block[2 * i] = scratch.buf[i].re * inv_n;
        }
        for i in 0..n / 2 {
            block[2 * i + 1] = scratch.buf[n - 1 - i].re * inv_n;
        }
    }
}

pub(crate) struct DctScratch {
    buf: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
}

/// In-place orthonormal fast Walsh-Hadamard transform. Self-inverse.
///
/// `data.len()` must be a power of two.
pub(crate) fn fwht(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for chunk in data.chunks_mut(2 * h) {
            for i in 0..h {
                let a = chunk[i];
                let b = chunk[i + h];
                chunk[i] = a + b;
                chunk[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}
