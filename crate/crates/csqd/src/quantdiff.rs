//! Joint sigma-delta quantization and keystream diffusion.
//!
//! The quantizer maps each measurement to a byte through an error-feedback
//! recurrence: the residual of every non-saturated step is carried into the
//! next one, so quantization noise is shaped instead of accumulated. The
//! diffusion stage chains each quantized byte to the previous ciphertext byte
//! and a keystream byte by modular addition, which destroys the linear
//! plaintext/ciphertext relationship the raw measurements would expose.

use crate::keyrng::Keystream;
use crate::{Error, Result};

/// The 8-bit quantizer: `round(a) + 127` on the linear range, clipped to 0
/// below `-127.5` and to 255 from `128.5` up. Ties round toward positive
/// infinity, so `Q(-127.5) = 0`.
pub fn quantize_scalar(a: f64) -> Result<u8> {
    if !a.is_finite() {
        return Err(Error::invalid(format!("non-finite quantizer input {a}")));
    }
    Ok(quantize_unchecked(a))
}

#[inline]
fn quantize_unchecked(a: f64) -> u8 {
    if a < -127.5 {
        0
    } else if a >= 128.5 {
        255
    } else {
        // round-half-up keeps the linear branch inside [0, 255]
        ((a + 0.5).floor() + 127.0) as u8
    }
}

/// First-order sigma-delta quantization of a measurement vector.
///
/// `q_i = Q(u_{i-1} + y_i)`; the error state advances to
/// `(u_{i-1} + y_i) - (q_i - 127)` on non-saturated steps and holds
/// otherwise. `q_i - 127` is the reconstruction level of the byte; feeding
/// back the raw offset-coded byte would pin the accumulator near -127 and
/// saturate everything that follows. Returns the bytes and the final error.
pub fn sigma_delta_quantize(y: &[f64], u0: f64) -> Result<(Vec<u8>, f64)> {
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite measurement {bad}")));
    }
    if !u0.is_finite() {
        return Err(Error::invalid(format!("non-finite initial error {u0}")));
    }
    let mut u = u0;
    let mut q = Vec::with_capacity(y.len());
    for &yi in y {
        let a = u + yi;
        let qi = quantize_unchecked(a);
        if qi > 0 && qi < 255 {
            u = a - (f64::from(qi) - 127.0);
        }
        q.push(qi);
    }
    Ok((q, u))
}

fn check_keystream(v: &Keystream, payload_len: usize) -> Result<()> {
    if v.len() != payload_len + 1 {
        return Err(Error::invalid(format!(
            "keystream length {} does not match payload length {} + 1",
            v.len(),
            payload_len
        )));
    }
    Ok(())
}

/// Diffusion: `q*_i = (q_i + v_i + q*_{i-1}) mod 256`, seeded with
/// `q*_0 = v_0`.
pub fn diffuse(q: &[u8], v: &Keystream) -> Result<Vec<u8>> {
    check_keystream(v, q.len())?;
    let vb = v.bytes();
    let mut prev = vb[0];
    let mut out = Vec::with_capacity(q.len());
    for (i, &qi) in q.iter().enumerate() {
        let b = qi.wrapping_add(vb[i + 1]).wrapping_add(prev);
        out.push(b);
        prev = b;
    }
    Ok(out)
}

/// Exact inverse of [`diffuse`].
pub fn inverse_diffuse(q_star: &[u8], v: &Keystream) -> Result<Vec<u8>> {
    check_keystream(v, q_star.len())?;
    let vb = v.bytes();
    let mut prev = vb[0];
    let mut out = Vec::with_capacity(q_star.len());
    for (i, &ci) in q_star.iter().enumerate() {
        out.push(ci.wrapping_sub(vb[i + 1]).wrapping_sub(prev));
        prev = ci;
    }
    Ok(out)
}

/// Fused quantize-and-diffuse pass; byte-identical to
/// `diffuse(sigma_delta_quantize(y, u0).0, v)`.
pub fn joint_quantize_diffuse(y: &[f64], v: &Keystream, u0: f64) -> Result<Vec<u8>> {
    check_keystream(v, y.len())?;
    if let Some(bad) = y.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite measurement {bad}")));
    }
    if !u0.is_finite() {
        return Err(Error::invalid(format!("non-finite initial error {u0}")));
    }
    let vb = v.bytes();
    let mut u = u0;
    let mut prev = vb[0];
    let mut out = Vec::with_capacity(y.len());
    for (i, &yi) in y.iter().enumerate() {
        let a = u + yi;
        let qi = quantize_unchecked(a);
        if qi > 0 && qi < 255 {
            u = a - (f64::from(qi) - 127.0);
        }
        let b = qi.wrapping_add(vb[i + 1]).wrapping_add(prev);
        out.push(b);
        prev = b;
    }
    Ok(out)
}

/// Decoder-side inverse of the quantizer and normalization:
/// `y_i = (q_i - 127) / scale + offset`.
pub fn dequantize(q: &[u8], offset: f64, scale: f64) -> Result<Vec<f64>> {
    if scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
        return Err(Error::invalid(format!(
            "bad dequantization parameters offset={offset} scale={scale}"
        )));
    }
    Ok(q.iter()
        .map(|&b| (f64::from(b) - 127.0) / scale + offset)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(bytes: &[u8]) -> Keystream {
        Keystream::from_bytes(bytes.to_vec())
    }

    #[test]
    fn quantizer_branches() {
        assert_eq!(quantize_scalar(0.0).unwrap(), 127);
        assert_eq!(quantize_scalar(-200.0).unwrap(), 0);
        assert_eq!(quantize_scalar(128.5).unwrap(), 255);
        assert_eq!(quantize_scalar(-127.5).unwrap(), 0);
        assert_eq!(quantize_scalar(128.0).unwrap(), 255);
        assert_eq!(quantize_scalar(127.49).unwrap(), 254);
        assert_eq!(quantize_scalar(-126.5).unwrap(), 1);
        assert!(quantize_scalar(f64::NAN).is_err());
        assert!(quantize_scalar(f64::INFINITY).is_err());
    }

    #[test]
    fn sigma_delta_zero_input() {
        let (q, u) = sigma_delta_quantize(&[0.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(q, vec![127, 127, 127]);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn sigma_delta_hand_traced() {
        // a=0.3 -> q=127, u=0.3; a=0.6 -> q=128, u=-0.4; a=-0.1 -> q=127, u=-0.1
        let (q, u) = sigma_delta_quantize(&[0.3, 0.3, 0.3], 0.0).unwrap();
        assert_eq!(q, vec![127, 128, 127]);
        assert!((u - (-0.1)).abs() < 1e-12);
    }

    #[test]
    fn sigma_delta_saturated_holds_error() {
        let (q, u) = sigma_delta_quantize(&[300.0], 0.2).unwrap();
        assert_eq!(q, vec![255]);
        assert_eq!(u, 0.2);
    }

    #[test]
    fn sigma_delta_error_bounded() {
        // Non-saturating inputs keep |u| <= 0.5 at every step.
        let mut s = 9u64;
        let y: Vec<f64> = (0..4096)
            .map(|_| {
                s = s.wrapping_add(0x9e3779b97f4a7c15);
                let mut z = s;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                z ^= z >> 31;
                ((z >> 11) as f64 / (1u64 << 52) as f64 - 1.0) * 120.0
            })
            .collect();
        let mut u = 0.25;
        for &yi in &y {
            let a = u + yi;
            let qi = quantize_scalar(a).unwrap();
            assert!(qi > 0 && qi < 255, "unexpected saturation in test data");
            u = a - (f64::from(qi) - 127.0);
            assert!(u.abs() <= 0.5, "|u|={} escaped the step bound", u.abs());
        }
    }

    #[test]
    fn diffuse_trivial_and_worked() {
        assert_eq!(diffuse(&[0], &ks(&[0, 0])).unwrap(), vec![0]);
        // q1* = 100+10+5 = 115; q2* = (200+20+115) mod 256 = 79
        assert_eq!(diffuse(&[100, 200], &ks(&[5, 10, 20])).unwrap(), vec![115, 79]);
    }

    #[test]
    fn inverse_diffuse_worked() {
        assert_eq!(
            inverse_diffuse(&[115, 79], &ks(&[5, 10, 20])).unwrap(),
            vec![100, 200]
        );
        assert_eq!(inverse_diffuse(&[0, 0], &ks(&[0, 0, 0])).unwrap(), vec![0, 0]);
    }

    #[test]
    fn diffuse_propagates_changes() {
        let v = ks(&[9, 1, 2, 3, 4, 5]);
        let a = diffuse(&[10, 20, 30, 40, 50], &v).unwrap();
        let b = diffuse(&[10, 21, 30, 40, 50], &v).unwrap();
        assert_eq!(a[0], b[0]);
        for i in 1..5 {
            assert_ne!(a[i], b[i], "byte {i} unchanged");
        }
    }

    #[test]
    fn diffuse_length_mismatch() {
        assert!(diffuse(&[1, 2], &ks(&[0, 0])).is_err());
        assert!(inverse_diffuse(&[1, 2], &ks(&[0, 0, 0, 0])).is_err());
    }

    #[test]
    fn joint_matches_worked_example() {
        // diffuse([127,128,127], [1,2,3,4]) = [130, 5, 136]
        let out = joint_quantize_diffuse(&[0.3, 0.3, 0.3], &ks(&[1, 2, 3, 4]), 0.0).unwrap();
        assert_eq!(out, vec![130, 5, 136]);
    }

    #[test]
    fn joint_equals_two_stage() {
        let mut s = 5u64;
        for trial in 0..1000 {
            let m = 1 + (trial % 13);
            let y: Vec<f64> = (0..m)
                .map(|_| {
                    s = s.wrapping_add(0x9e3779b97f4a7c15);
                    let mut z = s;
                    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                    z ^= z >> 31;
                    ((z >> 11) as f64 / (1u64 << 52) as f64 - 1.0) * 400.0
                })
                .collect();
            let v: Vec<u8> = (0..=m)
                .map(|_| {
                    s = s.wrapping_add(0x9e3779b97f4a7c15);
                    (s >> 33) as u8
                })
                .collect();
            let u0 = (s % 100) as f64 / 100.0 - 0.5;
            let v = Keystream::from_bytes(v);
            let joint = joint_quantize_diffuse(&y, &v, u0).unwrap();
            let (q, _) = sigma_delta_quantize(&y, u0).unwrap();
            let staged = diffuse(&q, &v).unwrap();
            assert_eq!(joint, staged);
        }
    }

    #[test]
    fn dequantize_examples() {
        assert_eq!(dequantize(&[127], 0.0, 1.0).unwrap(), vec![0.0]);
        let out = dequantize(&[128], 10.0, 0.5).unwrap();
        assert!((out[0] - 12.0).abs() < 1e-12);
        assert!(dequantize(&[1], 0.0, 0.0).is_err());
    }

    #[test]
    fn plain_quantize_roundtrip_bound() {
        // Plain Q (zero feedback): |dequantize(Q(y)) - y| <= 0.5/scale.
        let scale = 2.0;
        let offset = -3.0;
        for i in 0..1000 {
            let y = (i as f64 / 999.0 - 0.5) * 120.0;
            let q = quantize_scalar((y - offset) * scale).unwrap();
            let back = dequantize(&[q], offset, scale).unwrap()[0];
            assert!((back - y).abs() <= 0.5 / scale + 1e-12);
        }
    }
}
