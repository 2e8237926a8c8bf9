//! End-to-end encoding pipelines: the five-step sensing scheme and its
//! split variant where a lightweight client applies only the permutation and
//! a provider finishes transform, down-sampling, normalization, and
//! quantization/diffusion.

use crate::image::GrayImage;
use crate::keyrng::{derive_streams, Permutation, SecretKey};
use crate::package::CipherPackage;
use crate::quantdiff::joint_quantize_diffuse;
use crate::srm::{normalize, RandomizerKind, SensingConfig, SensingOperator};
use crate::{Error, Result};

fn check_dims(img: &GrayImage, cfg: &SensingConfig) -> Result<()> {
    if img.height() != cfg.height() || img.width() != cfg.width() {
        return Err(Error::invalid(format!(
            "image is {}x{} but the config expects {}x{}",
            img.height(),
            img.width(),
            cfg.height(),
            cfg.width()
        )));
    }
    Ok(())
}

/// Full encode: randomize, block-transform, down-sample, normalize, then
/// jointly quantize and diffuse. Deterministic in `(image, cfg, key)`.
pub fn encode_image(
    img: &GrayImage,
    cfg: &SensingConfig,
    key: &SecretKey,
) -> Result<CipherPackage> {
    check_dims(img, cfg)?;
    let op = SensingOperator::new(cfg, key)?;
    let y = op.forward(&img.to_signal())?;
    let (y_norm, offset, scale) = normalize(&y)?;
    let payload = joint_quantize_diffuse(&y_norm, op.keystream(), op.initial_error())?;
    CipherPackage::new(cfg, offset, scale, payload)
}

/// Client half of the split workflow: apply the keyed permutation to the
/// pixels and nothing else. The output is an ordinary image (a permutation
/// preserves the pixel multiset), serving as lightweight encryption.
pub fn randomize_image(img: &GrayImage, key: &SecretKey) -> Result<GrayImage> {
    let n = img.height() * img.width();
    // Only the first n draws (the permutation) are used here; m is a dummy.
    let streams = derive_streams(key, n, 1)?;
    let stacked = img.column_stacked();
    let permuted: Vec<u8> = (0..n).map(|i| stacked[streams.randomizer.source(i)]).collect();
    GrayImage::from_column_stacked(img.height(), img.width(), &permuted)
}

/// Provider half of the split workflow: transform, down-sample, normalize,
/// quantize and diffuse an already-randomized image. The composition
/// `compress_randomized(randomize_image(x))` is byte-identical to
/// [`encode_image`] with the permutation randomizer.
pub fn compress_randomized(
    randomized: &GrayImage,
    cfg: &SensingConfig,
    key: &SecretKey,
) -> Result<CipherPackage> {
    if cfg.randomizer() != RandomizerKind::Permutation {
        return Err(Error::invalid(
            "the split workflow requires the permutation randomizer",
        ));
    }
    check_dims(randomized, cfg)?;
    let streams = derive_streams(key, cfg.signal_len(), cfg.measurements())?;
    // The permutation is already applied, so run the tail of the pipeline
    // with an identity randomizer but the keyed down-sampler and keystream.
    let op = SensingOperator::from_parts(
        cfg,
        Permutation::identity(cfg.signal_len()),
        streams.downsampler,
        streams.keystream,
        streams.initial_error,
    )?;
    let y = op.forward(&randomized.to_signal())?;
    let (y_norm, offset, scale) = normalize(&y)?;
    let payload = joint_quantize_diffuse(&y_norm, op.keystream(), op.initial_error())?;
    CipherPackage::new(cfg, offset, scale, payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srm::TransformKind;

    fn cfg(h: usize, w: usize, b: usize, m: usize, r: RandomizerKind) -> SensingConfig {
        SensingConfig::new(h, w, b, m, TransformKind::Dct, r).unwrap()
    }

    #[test]
    fn encode_is_deterministic() {
        let img = GrayImage::test_pattern(8, 8, 1);
        let key = SecretKey::from_bytes([5; 16]);
        let c = cfg(8, 8, 8, 32, RandomizerKind::BernoulliSign);
        let a = encode_image(&img, &c, &key).unwrap();
        let b = encode_image(&img, &c, &key).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn split_workflow_matches_direct_encode() {
        let img = GrayImage::test_pattern(8, 8, 2);
        let key = SecretKey::from_bytes([6; 16]);
        let c = cfg(8, 8, 8, 50, RandomizerKind::Permutation);
        let direct = encode_image(&img, &c, &key).unwrap();
        let randomized = randomize_image(&img, &key).unwrap();
        let split = compress_randomized(&randomized, &c, &key).unwrap();
        assert_eq!(direct.to_bytes(), split.to_bytes());
    }

    #[test]
    fn randomize_preserves_histogram() {
        let img = GrayImage::test_pattern(8, 8, 3);
        let key = SecretKey::from_bytes([7; 16]);
        let out = randomize_image(&img, &key).unwrap();
        let mut ha = [0u32; 256];
        let mut hb = [0u32; 256];
        for &p in img.pixels() {
            ha[p as usize] += 1;
        }
        for &p in out.pixels() {
            hb[p as usize] += 1;
        }
        assert_eq!(ha, hb);
        assert_ne!(img.pixels(), out.pixels());
    }

    #[test]
    fn split_rejects_sign_randomizer() {
        let img = GrayImage::test_pattern(8, 8, 4);
        let key = SecretKey::from_bytes([8; 16]);
        let c = cfg(8, 8, 8, 32, RandomizerKind::BernoulliSign);
        assert!(compress_randomized(&img, &c, &key).is_err());
    }

    #[test]
    fn encode_rejects_dimension_mismatch() {
        let img = GrayImage::test_pattern(8, 4, 1);
        let key = SecretKey::from_bytes([9; 16]);
        let c = cfg(8, 8, 8, 32, RandomizerKind::Permutation);
        assert!(encode_image(&img, &c, &key).is_err());
    }
}
