//! Linear MMSE detection, hard demapping and bit-error counting.

use faer::linalg::solvers::{Llt, Solve};
use faer::{c64, Mat, Side};
use num_complex::Complex64;

use crate::channel::{mat_vec, EffectiveChannel};
use crate::daft::SymbolFrame;
use crate::error::{Error, Result};
use crate::waveform::ConstellationSpec;

/// Smallest accepted ratio between the extreme diagonal entries of the
/// Cholesky factor; below it the Gram matrix is treated as singular.
pub const PIVOT_RATIO_MIN: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub ps: f64,
    pub alpha: f64,
    pub sigma2: f64,
}

impl LinkBudget {
    pub fn new(ps: f64, alpha: f64, sigma2: f64) -> Result<Self> {
        for (name, v) in [("ps", ps), ("alpha", alpha), ("sigma2", sigma2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(LinkBudget { ps, alpha, sigma2 })
    }

    /// Unit power and unit large-scale gain, so `γ = 1/σ²`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 10f64.powf(-snr_db / 10.0))
    }

    pub fn snr(&self) -> f64 {
        self.ps * self.alpha * self.alpha / self.sigma2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub x_hat: SymbolFrame,
    pub hard_bits: Vec<u8>,
    pub errors: usize,
}

/// Factorization of `H0 H0ᴴ + σ²I` for a fixed matrix `H0`.
///
/// Any matrix of the form `Λ_rx H0 Λ_txᴴ` with diagonal unitaries has Gram
/// matrix `Λ_rx (H0 H0ᴴ) Λ_rxᴴ`, so its MMSE estimate is
/// `Λ_tx H0ᴴ (H0 H0ᴴ + σ²I)⁻¹ Λ_rxᴴ y` and one factorization serves all of
/// them.
pub struct MmseFactor {
    h0: Mat<c64>,
    llt: Llt<c64>,
}

impl MmseFactor {
    pub fn new(h0: Mat<c64>, sigma2: f64) -> Result<Self> {
        let gram = &h0 * h0.adjoint();
        Self::with_gram(h0, &gram, sigma2)
    }

    /// Reuses a precomputed `H0 H0ᴴ` (the Gram product dominates the cost).
    pub fn with_gram(h0: Mat<c64>, gram: &Mat<c64>, sigma2: f64) -> Result<Self> {
        if h0.nrows() != h0.ncols() {
            return Err(Error::length("channel columns", h0.nrows(), h0.ncols()));
        }
        if gram.nrows() != h0.nrows() || gram.ncols() != h0.nrows() {
            return Err(Error::length("Gram matrix", h0.nrows(), gram.nrows()));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be non-negative, got {sigma2}"
            )));
        }
        let n = h0.nrows();
        let mut g = gram.clone();
        for i in 0..n {
            g[(i, i)] += c64::new(sigma2, 0.0);
        }
        let llt = g
            .llt(Side::Lower)
            .map_err(|e| Error::Numeric(format!("Cholesky factorization failed: {e:?}")))?;
        let l = llt.L();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = l[(i, i)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if !(lo > PIVOT_RATIO_MIN * hi) {
            return Err(Error::Numeric(format!(
                "rank-deficient system: Cholesky pivot ratio {:.3e}",
                lo / hi
            )));
        }
        Ok(MmseFactor { h0, llt })
    }

    pub fn n(&self) -> usize {
        self.h0.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.h0
    }

    /// MMSE estimate for `H0` itself.
    pub fn equalize(&self, y: &[Complex64]) -> Result<SymbolFrame> {
        self.equalize_rotated(y, None, None)
    }

    /// MMSE estimate for `Λ_rx H0 Λ_txᴴ`, where the arguments are the
    /// diagonals of `Λ_rx` and `Λ_tx`; `None` is the identity.
    pub fn equalize_rotated(
        &self,
        y: &[Complex64],
        rx: Option<&[Complex64]>,
        tx: Option<&[Complex64]>,
    ) -> Result<SymbolFrame> {
        let n = self.n();
        if y.len() != n {
            return Err(Error::length("observation", n, y.len()));
        }
        for d in [rx, tx].into_iter().flatten() {
            if d.len() != n {
                return Err(Error::length("diagonal rotation", n, d.len()));
            }
        }
        let rhs = Mat::from_fn(n, 1, |i, _| match rx {
            Some(d) => d[i].conj() * y[i],
            None => y[i],
        });
        let z = self.llt.solve(&rhs);
        let z: Vec<Complex64> = (0..n).map(|i| z[(i, 0)]).collect();
        let mut x = mat_vec(&self.h0, &z, true);
        if let Some(d) = tx {
            for (v, t) in x.iter_mut().zip(d) {
                *v *= t;
            }
        }
        Ok(SymbolFrame(x))
    }
}

/// `x̂ = Hᴴ (H Hᴴ + σ²I)⁻¹ y` via a Hermitian factorization.
pub fn mmse_equalize(h: &EffectiveChannel, y: &SymbolFrame, sigma2: f64) -> Result<SymbolFrame> {
    MmseFactor::new(h.matrix.clone(), sigma2)?.equalize(y)
}

/// Nearest-point hard decisions, emitted as Gray labels.
pub fn demap(x_hat: &[Complex64], spec: &ConstellationSpec) -> Vec<u8> {
    x_hat
        .iter()
        .flat_map(|&z| spec.label_bits(spec.nearest(z)))
        .collect()
}

pub fn count_errors(decided: &[u8], reference: &[u8]) -> Result<usize> {
    if decided.len() != reference.len() {
        return Err(Error::length("decided bits", reference.len(), decided.len()));
    }
    Ok(decided.iter().zip(reference).filter(|(a, b)| a != b).count())
}

/// Demaps an estimate and scores it against the transmitted bits.
pub fn score(x_hat: SymbolFrame, spec: &ConstellationSpec, reference: &[u8]) -> Result<DetectionResult> {
    let hard_bits = demap(&x_hat, spec);
    let errors = count_errors(&hard_bits, reference)?;
    Ok(DetectionResult {
        x_hat,
        hard_bits,
        errors,
    })
}
