//! Decoder: inverse diffusion, saturation rejection, de-quantization, and l1
//! sparse reconstruction, plus the PSNR metric.

mod basis;
mod gpsr;

pub use basis::{sparsify, Basis2d, BasisKind, SparsifyDirection};
pub use gpsr::{gpsr_solve, GpsrSolution, SolverConfig};

use crate::image::GrayImage;
use crate::keyrng::SecretKey;
use crate::operator::{LinearOperator, RowSubsetOperator};
use crate::package::CipherPackage;
use crate::quantdiff::{dequantize, inverse_diffuse};
use crate::srm::SensingOperator;
use crate::{Error, Result};

/// Keeps the measurements strictly inside `(0, 255)`, in order, together
/// with their 0-based positions. The kept positions implicitly define the
/// reduced sensing operator (the surviving rows of the full one).
pub fn reject_saturated(q: &[u8]) -> Result<(Vec<usize>, Vec<u8>)> {
    let mut kept_indices = Vec::with_capacity(q.len());
    let mut kept = Vec::with_capacity(q.len());
    for (i, &b) in q.iter().enumerate() {
        if b > 0 && b < 255 {
            kept_indices.push(i);
            kept.push(b);
        }
    }
    if kept.is_empty() {
        return Err(Error::AllSaturated);
    }
    Ok((kept_indices, kept))
}

/// Peak signal-to-noise ratio in dB; identical images yield infinity.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::invalid(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum::<f64>()
        / a.pixels().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// A decoded image plus solver diagnostics.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub image: GrayImage,
    /// Measurements that survived saturation rejection.
    pub kept: usize,
    /// Total measurements in the package.
    pub total: usize,
    pub iterations: usize,
    pub objective: f64,
    pub tau: f64,
}

/// Composition `A = Phi * Psi`: coefficients to measurements through the
/// synthesis transform and a sensing operator.
pub(crate) struct SynthesisOperator<'a> {
    pub phi: &'a dyn LinearOperator,
    pub basis: &'a Basis2d,
}

impl LinearOperator for SynthesisOperator<'_> {
    fn rows(&self) -> usize {
        self.phi.rows()
    }

    fn cols(&self) -> usize {
        self.phi.cols()
    }

    fn forward(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.phi.forward(&self.basis.synthesis(s)?)
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.basis.analysis(&self.phi.adjoint(y)?)
    }
}

/// l1-decodes an image from real measurements seen through `phi`.
///
/// This is the shared back end of package decoding, the non-quantized
/// baseline, and the attack harness (where `phi` is an estimated matrix).
pub fn l1_decode_image(
    phi: &dyn LinearOperator,
    y: &[f64],
    height: usize,
    width: usize,
    cfg: &SolverConfig,
) -> Result<(GrayImage, GpsrSolution)> {
    if phi.cols() != height * width {
        return Err(Error::invalid(format!(
            "operator takes {} inputs but the image is {height}x{width}",
            phi.cols()
        )));
    }
    let basis = Basis2d::new(height, width, cfg.basis)?;
    let a = SynthesisOperator { phi, basis: &basis };
    let solution = gpsr_solve(&a, y, cfg)?;
    let x = basis.synthesis(&solution.coeffs)?;
    Ok((GrayImage::from_signal(height, width, &x)?, solution))
}

/// Full decode of a cipher package under `key`.
///
/// Inverse diffusion, saturation rejection, de-quantization, then l1
/// reconstruction over the surviving rows. A wrong key produces no error,
/// only noise — the cipher carries no integrity check by design.
pub fn reconstruct_image(
    pkg: &CipherPackage,
    key: &SecretKey,
    cfg: &SolverConfig,
) -> Result<Reconstruction> {
    let sensing_cfg = pkg.sensing_config()?;
    let op = SensingOperator::new(&sensing_cfg, key)?;

    let q = inverse_diffuse(pkg.payload(), op.keystream())?;
    let (kept_indices, q_kept) = reject_saturated(&q)?;
    let y = dequantize(&q_kept, pkg.offset(), pkg.scale())?;

    let kept = kept_indices.len();
    let reduced = RowSubsetOperator::new(&op, kept_indices)?;
    let (image, solution) = l1_decode_image(&reduced, &y, pkg.height(), pkg.width(), cfg)?;
    Ok(Reconstruction {
        image,
        kept,
        total: pkg.measurements(),
        iterations: solution.iterations,
        objective: solution.objective,
        tau: solution.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrng::Keystream;
    use crate::pipeline::encode_image;
    use crate::srm::{RandomizerKind, SensingConfig, TransformKind};

    #[test]
    fn reject_saturated_keeps_interior() {
        let (idx, kept) = reject_saturated(&[0, 127, 255]).unwrap();
        assert_eq!(idx, vec![1]);
        assert_eq!(kept, vec![127]);
    }

    #[test]
    fn reject_saturated_identity_when_clean() {
        let q = vec![1, 2, 254, 100];
        let (idx, kept) = reject_saturated(&q).unwrap();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert_eq!(kept, q);
    }

    #[test]
    fn reject_saturated_all_gone() {
        assert!(matches!(
            reject_saturated(&[0, 255]),
            Err(Error::AllSaturated)
        ));
    }

    #[test]
    fn psnr_reference_values() {
        let a = GrayImage::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        assert!(psnr(&a, &a).unwrap().is_infinite());

        let b = GrayImage::new(2, 2, vec![26, 36, 46, 56]).unwrap();
        let got = psnr(&a, &b).unwrap();
        let want = 20.0 * (255.0f64 / 16.0).log10();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");

        let black = GrayImage::new(1, 2, vec![0, 0]).unwrap();
        let white = GrayImage::new(1, 2, vec![255, 255]).unwrap();
        assert!((psnr(&black, &white).unwrap() - 0.0).abs() < 1e-12);

        let tall = GrayImage::new(2, 1, vec![0, 0]).unwrap();
        assert!(psnr(&black, &tall).is_err());
    }

    #[test]
    fn kept_rows_match_materialized_row_deletion() {
        let cfg = SensingConfig::new(
            4,
            4,
            4,
            12,
            TransformKind::Dct,
            RandomizerKind::Permutation,
        )
        .unwrap();
        let key = SecretKey::from_bytes([3; 16]);
        let op = SensingOperator::new(&cfg, &key).unwrap();
        let phi = op.materialize().unwrap();
        let kept = vec![0usize, 3, 7, 11];
        let sub = RowSubsetOperator::new(&op, kept.clone()).unwrap();

        let x: Vec<f64> = (0..16).map(|i| (i as f64) - 8.0).collect();
        let got = sub.forward(&x).unwrap();
        for (row_out, &row_idx) in got.iter().zip(&kept) {
            let want: f64 = (0..16).map(|j| phi[(row_idx, j)] * x[j]).sum();
            assert!((row_out - want).abs() < 1e-12);
        }
    }

    #[test]
    fn square_unquantized_system_recovers_exactly() {
        // SR = 1, B = N, real measurements fed straight to the solver: the
        // operator is orthonormal so recovery is exact.
        let (h, w) = (4, 4);
        let cfg = SensingConfig::new(
            h,
            w,
            16,
            16,
            TransformKind::Dct,
            RandomizerKind::Permutation,
        )
        .unwrap();
        let key = SecretKey::from_bytes([9; 16]);
        let op = SensingOperator::new(&cfg, &key).unwrap();
        let img = GrayImage::test_pattern(h, w, 5);
        let y = op.forward(&img.to_signal()).unwrap();
        let solver = SolverConfig {
            tau: Some(1e-9),
            max_iters: 500,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let (decoded, _) = l1_decode_image(&op, &y, h, w, &solver).unwrap();
        // Exact recovery up to the final u8 rounding.
        assert_eq!(decoded.pixels(), img.pixels());
    }

    #[test]
    fn encode_decode_sparse_image_high_psnr() {
        // 3-sparse synthetic image at SR = 0.9, no saturation expected.
        let (h, w) = (8, 8);
        let basis = Basis2d::new(h, w, BasisKind::Dct2d).unwrap();
        let mut coeffs = vec![0.0; h * w];
        coeffs[0] = 900.0;
        coeffs[3] = 160.0;
        coeffs[17] = 120.0;
        let x = basis.synthesis(&coeffs).unwrap();
        let img = GrayImage::from_signal(h, w, &x).unwrap();

        let cfg = SensingConfig::new(
            h,
            w,
            16,
            58, // SR ~ 0.9
            TransformKind::Dct,
            RandomizerKind::BernoulliSign,
        )
        .unwrap();
        let key = SecretKey::from_bytes([77; 16]);
        let pkg = encode_image(&img, &cfg, &key).unwrap();
        let rec = reconstruct_image(&pkg, &key, &SolverConfig::default()).unwrap();
        let quality = psnr(&img, &rec.image).unwrap();
        assert!(quality > 40.0, "psnr {quality}");
    }

    #[test]
    fn wrong_key_decodes_to_noise() {
        let (h, w) = (16, 16);
        let img = GrayImage::test_pattern(h, w, 9);
        let cfg = SensingConfig::new(
            h,
            w,
            32,
            205,
            TransformKind::Dct,
            RandomizerKind::BernoulliSign,
        )
        .unwrap();
        let key = SecretKey::from_bytes([1; 16]);
        let wrong = SecretKey::from_bytes([2; 16]);
        let pkg = encode_image(&img, &cfg, &key).unwrap();
        let rec = reconstruct_image(&pkg, &wrong, &SolverConfig::default()).unwrap();
        let quality = psnr(&img, &rec.image).unwrap();
        assert!(quality < 12.0, "wrong key still gave {quality} dB");
    }

    #[test]
    fn reconstruct_rejects_fully_saturated_payload() {
        let cfg = SensingConfig::new(
            2,
            2,
            4,
            4,
            TransformKind::Dct,
            RandomizerKind::Permutation,
        )
        .unwrap();
        let key = SecretKey::from_bytes([4; 16]);
        let op = SensingOperator::new(&cfg, &key).unwrap();
        // Forge a payload that de-diffuses to saturated bytes only.
        let q = vec![0u8, 255, 0, 255];
        let q_star = crate::quantdiff::diffuse(&q, op.keystream()).unwrap();
        let pkg = CipherPackage::new(&cfg, 0.0, 1.0, q_star).unwrap();
        assert!(matches!(
            reconstruct_image(&pkg, &key, &SolverConfig::default()),
            Err(Error::AllSaturated)
        ));
    }

    #[test]
    fn synthesis_operator_adjoint_identity() {
        let cfg = SensingConfig::new(
            8,
            8,
            8,
            40,
            TransformKind::Wht,
            RandomizerKind::BernoulliSign,
        )
        .unwrap();
        let key = SecretKey::from_bytes([12; 16]);
        let op = SensingOperator::new(&cfg, &key).unwrap();
        let basis = Basis2d::new(8, 8, BasisKind::Dct2d).unwrap();
        let a = SynthesisOperator {
            phi: &op,
            basis: &basis,
        };
        let s: Vec<f64> = (0..64).map(|i| ((i * 37 + 11) % 23) as f64 - 11.0).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 29 + 5) % 17) as f64 - 8.0).collect();
        let as_ = a.forward(&s).unwrap();
        let aty = a.adjoint(&y).unwrap();
        let lhs: f64 = as_.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs: f64 = s.iter().zip(&aty).map(|(p, q)| p * q).sum();
        assert!((lhs - rhs).abs() / rhs.abs().max(1.0) < 1e-10);
    }

    #[test]
    fn keystream_mismatch_is_an_error() {
        let bad = Keystream::from_bytes(vec![0; 3]);
        assert!(crate::quantdiff::inverse_diffuse(&[1, 2, 3], &bad).is_err());
    }
}
