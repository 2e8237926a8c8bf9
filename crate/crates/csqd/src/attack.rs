//! Known-plaintext attack harness.
//!
//! An attacker holding plaintext/ciphertext pairs stacks the plaintexts into
//! a full-rank matrix `X` and the ciphertexts into `Y`, then estimates the
//! hidden sensing map by solving `Phi_hat X = Y`. Against raw linear
//! measurements this recovers the key material; against the quantized and
//! diffused pipeline the linear model no longer holds and the estimate is
//! useless. The harness quantifies both outcomes.

use nalgebra::DMatrix;

use crate::image::GrayImage;
use crate::keyrng::SecretKey;
use crate::operator::DenseOperator;
use crate::pipeline::encode_image;
use crate::recon::{l1_decode_image, psnr, SolverConfig};
use crate::srm::{sense, SensingConfig};
use crate::{Error, Result};

/// Which pipeline the oracle exposes to the attacker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackMode {
    /// Real-valued measurements `y = Phi x`.
    RawLinear,
    /// Quantized and diffused bytes, cast to reals.
    QuantizedDiffused,
}

impl std::fmt::Display for AttackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackMode::RawLinear => "raw-linear",
            AttackMode::QuantizedDiffused => "quantized-diffused",
        })
    }
}

impl std::str::FromStr for AttackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "raw-linear" | "raw_linear" => Ok(AttackMode::RawLinear),
            "quantized" | "quantized-diffused" | "quantized_diffused" => {
                Ok(AttackMode::QuantizedDiffused)
            }
            other => Err(Error::invalid(format!(
                "unknown attack mode {other:?} (expected raw or quantized)"
            ))),
        }
    }
}

/// Collected plaintext/ciphertext pairs; `plaintexts` is square and full
/// rank by construction.
pub struct KpaDataset {
    pub plaintexts: DMatrix<f64>,
    pub ciphertexts: DMatrix<f64>,
    pub mode: AttackMode,
}

/// Relative rank-screening threshold: a candidate must keep the smallest
/// singular value above this fraction of the largest.
const RANK_THRESHOLD: f64 = 1e-8;
const CONDITION_LIMIT: f64 = 1e12;

/// Gathers exactly `n` linearly independent plaintexts and their ciphertexts.
///
/// Candidates come from `candidate(i)`; each is screened by projecting onto
/// the span collected so far and demanding a residual at least
/// `1e-8 * ||candidate||`, which mirrors the singular-value threshold. The
/// final matrix is verified by SVD. Fails after `10 * n` candidates.
pub fn collect_pairs<O, C>(
    mut oracle: O,
    n: usize,
    mode: AttackMode,
    mut candidate: C,
) -> Result<KpaDataset>
where
    O: FnMut(&[f64]) -> Result<Vec<f64>>,
    C: FnMut(usize) -> Vec<f64>,
{
    if n == 0 {
        return Err(Error::invalid("need at least one plaintext"));
    }
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
    // Orthonormalized copies of the accepted plaintexts for fast screening.
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut ciphers: Vec<Vec<f64>> = Vec::with_capacity(n);
    let budget = 10 * n;
    let mut attempts = 0;

    while accepted.len() < n {
        if attempts >= budget {
            return Err(Error::Collection {
                needed: n,
                attempts,
            });
        }
        attempts += 1;
        let x = candidate(attempts - 1);
        if x.len() != n {
            return Err(Error::invalid(format!(
                "candidate has {} entries, expected {n}",
                x.len()
            )));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        // Modified Gram-Schmidt residual against the current span.
        let mut resid = x.clone();
        for q in &ortho {
            let proj: f64 = resid.iter().zip(q).map(|(a, b)| a * b).sum();
            for (r, qi) in resid.iter_mut().zip(q) {
                *r -= proj * qi;
            }
        }
        let resid_norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        if resid_norm <= RANK_THRESHOLD * norm {
            continue; // would reduce numerical rank
        }
        for r in resid.iter_mut() {
            *r /= resid_norm;
        }
        ortho.push(resid);
        ciphers.push(oracle(&x)?);
        accepted.push(x);
    }

    let m = ciphers[0].len();
    if ciphers.iter().any(|c| c.len() != m) {
        return Err(Error::invalid("oracle returned inconsistent lengths"));
    }
    let plaintexts = DMatrix::from_fn(n, n, |i, j| accepted[j][i]);
    let ciphertexts = DMatrix::from_fn(m, n, |i, j| ciphers[j][i]);

    // Final guarantee: the screened matrix really is numerically full rank.
    let svals = plaintexts.clone().singular_values();
    let (smax, smin) = (svals.max(), svals.min());
    if smin <= RANK_THRESHOLD * smax {
        return Err(Error::Collection {
            needed: n,
            attempts,
        });
    }

    Ok(KpaDataset {
        plaintexts,
        ciphertexts,
        mode,
    })
}

/// Random byte-valued plaintext generator (images from the attacker's
/// perspective), deterministic in `seed`.
pub fn random_plaintexts(n: usize, seed: u64) -> impl FnMut(usize) -> Vec<f64> {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    move |_| {
        (0..n)
            .map(|_| f64::from((rng.next_u32() & 0xff) as u8))
            .collect()
    }
}

/// Solves `Phi_hat X = Y` by LU decomposition (no explicit inverse) after a
/// conditioning check.
pub fn estimate_phi(data: &KpaDataset) -> Result<DMatrix<f64>> {
    let x = &data.plaintexts;
    let svals = x.clone().singular_values();
    let (smax, smin) = (svals.max(), svals.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    // Phi X = Y  <=>  X' Phi' = Y'
    let lu = x.transpose().lu();
    let phi_t = lu
        .solve(&data.ciphertexts.transpose())
        .ok_or_else(|| Error::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        })?;
    Ok(phi_t.transpose())
}

/// Outcome of one attack run.
#[derive(Clone, Debug)]
pub struct AttackReport {
    pub mode: AttackMode,
    pub n: usize,
    pub m: usize,
    /// Relative Frobenius error of the estimate against the true operator,
    /// when the harness exposes it.
    pub phi_error: Option<f64>,
    /// PSNR of the l1 reconstruction of a held-out ciphertext using the
    /// estimated operator.
    pub decode_psnr: f64,
}

impl AttackReport {
    /// Key-value text form, one `key=value` per line.
    pub fn to_kv(&self) -> String {
        let phi = self
            .phi_error
            .map_or_else(|| "nan".to_string(), |v| format!("{v:.6e}"));
        format!(
            "mode={}\nn={}\nm={}\nphi_error={}\ndecode_psnr_db={:.4}\n",
            self.mode, self.n, self.m, phi, self.decode_psnr
        )
    }

    pub fn csv_header() -> &'static str {
        "mode,n,m,phi_error,decode_psnr_db"
    }

    pub fn to_csv_row(&self) -> String {
        let phi = self
            .phi_error
            .map_or_else(|| "nan".to_string(), |v| format!("{v:.6e}"));
        format!(
            "{},{},{},{},{:.4}",
            self.mode, self.n, self.m, phi, self.decode_psnr
        )
    }
}

/// Frobenius-relative error between an estimate and the true operator.
pub fn relative_frobenius(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let diff = estimate - truth;
    diff.norm() / truth.norm().max(f64::MIN_POSITIVE)
}

/// Scores an estimated operator: ciphertext of a held-out trial image is
/// decoded with the estimate, and the estimate is compared against the true
/// operator when available.
pub fn evaluate_attack<O>(
    phi_hat: &DMatrix<f64>,
    mut oracle: O,
    trial: &GrayImage,
    true_phi: Option<&DMatrix<f64>>,
    mode: AttackMode,
    solver: &SolverConfig,
) -> Result<AttackReport>
where
    O: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = trial.height() * trial.width();
    if phi_hat.ncols() != n {
        return Err(Error::invalid(format!(
            "estimate has {} columns but the trial image has {n} pixels",
            phi_hat.ncols()
        )));
    }
    let cipher = oracle(&trial.to_signal())?;
    if cipher.len() != phi_hat.nrows() {
        return Err(Error::invalid(
            "oracle output length does not match the estimated operator",
        ));
    }
    let op = DenseOperator::new(phi_hat.clone());
    let (decoded, _) = l1_decode_image(&op, &cipher, trial.height(), trial.width(), solver)?;
    Ok(AttackReport {
        mode,
        n,
        m: phi_hat.nrows(),
        phi_error: true_phi.map(|t| relative_frobenius(phi_hat, t)),
        decode_psnr: psnr(trial, &decoded)?,
    })
}

/// Encryption oracle for the raw linear pipeline: `y = Phi x`.
pub fn raw_linear_oracle(
    cfg: SensingConfig,
    key: SecretKey,
) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
    move |x: &[f64]| sense(x, &cfg, &key)
}

/// Encryption oracle for the full pipeline: quantized and diffused bytes
/// cast to reals. Inputs are rounded into pixel range first.
pub fn quantized_oracle(
    cfg: SensingConfig,
    key: SecretKey,
) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
    move |x: &[f64]| {
        let img = GrayImage::from_signal(cfg.height(), cfg.width(), x)?;
        let pkg = encode_image(&img, &cfg, &key)?;
        Ok(pkg.payload().iter().map(|&b| f64::from(b)).collect())
    }
}

/// Runs the whole attack end to end: collect pairs, estimate, evaluate on a
/// held-out trial image. Deterministic in `(cfg, key, seed)`.
pub fn run_attack(
    cfg: &SensingConfig,
    key: &SecretKey,
    mode: AttackMode,
    seed: u64,
    solver: &SolverConfig,
) -> Result<AttackReport> {
    let n = cfg.signal_len();
    let dataset = match mode {
        AttackMode::RawLinear => collect_pairs(
            raw_linear_oracle(*cfg, *key),
            n,
            mode,
            random_plaintexts(n, seed),
        )?,
        AttackMode::QuantizedDiffused => collect_pairs(
            quantized_oracle(*cfg, *key),
            n,
            mode,
            random_plaintexts(n, seed),
        )?,
    };
    let phi_hat = estimate_phi(&dataset)?;
    let true_phi = crate::srm::SensingOperator::new(cfg, key)?.materialize()?;
    let trial = GrayImage::test_pattern(cfg.height(), cfg.width(), seed ^ 0x5eed);
    match mode {
        AttackMode::RawLinear => evaluate_attack(
            &phi_hat,
            raw_linear_oracle(*cfg, *key),
            &trial,
            Some(&true_phi),
            mode,
            solver,
        ),
        AttackMode::QuantizedDiffused => evaluate_attack(
            &phi_hat,
            quantized_oracle(*cfg, *key),
            &trial,
            Some(&true_phi),
            mode,
            solver,
        ),
    }
}
