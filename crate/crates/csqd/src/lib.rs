//! # csqd
//!
//! Fast compressed sensing of grayscale images with embedded secrecy.
//!
//! A 128-bit key drives every random artifact of the scheme: a structurally
//! random sensing operator (pre-randomizer, block orthogonal transform,
//! uniform down-sampler), a first-order sigma-delta quantizer whose output
//! bytes are chained through a keystream by modular addition, and the
//! matching decoder (inverse diffusion, saturation rejection, l1 sparse
//! reconstruction by gradient projection).
//!
//! The [`attack`] module implements a known-plaintext harness that estimates
//! the sensing matrix from plaintext/ciphertext pairs; it succeeds against
//! the raw linear pipeline and fails once quantization and diffusion are in
//! place, which is the security claim this crate exists to demonstrate.
//!
//! ## Pipeline
//!
//! ```text
//! encode:  image -> randomize -> block transform -> down-sample/scale
//!                -> normalize -> sigma-delta quantize + diffuse -> package
//! decode:  package -> inverse diffuse -> reject saturated -> dequantize
//!                  -> l1 solve (GPSR) -> image
//! ```
//!
//! ## Example
//!
//! ```
//! use csqd::{encode_image, reconstruct_image, psnr};
//! use csqd::{GrayImage, SecretKey, SensingConfig, SolverConfig};
//! use csqd::{RandomizerKind, TransformKind};
//!
//! let key = SecretKey::from_hex("000102030405060708090a0b0c0d0e0f").unwrap();
//! let image = GrayImage::test_pattern(32, 32, 1);
//! let cfg = SensingConfig::new(
//!     32, 32, 16, 820, // H, W, B, M  (SR = 0.8)
//!     TransformKind::Dct,
//!     RandomizerKind::BernoulliSign,
//! ).unwrap();
//!
//! let package = encode_image(&image, &cfg, &key).unwrap();
//! let decoded = reconstruct_image(&package, &key, &SolverConfig::default()).unwrap();
//! assert!(psnr(&image, &decoded.image).unwrap() > 20.0);
//! ```

pub mod attack;
mod error;
pub mod image;
pub mod keyrng;
pub mod operator;
pub mod package;
pub mod pipeline;
pub mod quantdiff;
pub mod recon;
pub mod srm;
pub mod stats;
mod transform;

pub use error::{Error, Result};
pub use image::GrayImage;
pub use keyrng::{derive_streams, DerivedStreams, Keystream, Permutation, RngState, SecretKey};
pub use operator::{DenseOperator, LinearOperator, RowSubsetOperator};
pub use package::CipherPackage;
pub use pipeline::{compress_randomized, encode_image, randomize_image};
pub use quantdiff::{
    dequantize, diffuse, inverse_diffuse, joint_quantize_diffuse, quantize_scalar,
    sigma_delta_quantize,
};
pub use recon::{
    gpsr_solve, l1_decode_image, psnr, reconstruct_image, reject_saturated, sparsify, Basis2d,
    BasisKind, GpsrSolution, Reconstruction, SolverConfig, SparsifyDirection,
};
pub use srm::{
    adjoint, apply_randomizer, block_transform, downsample_scale, normalize, sense,
    RandomizerKind, SensingConfig, SensingOperator, TransformDirection, TransformKind,
};
