//! Discrete affine Fourier transform primitives.
//!
//! The forward transform is `A = Λ(c2) · F · Λ(c1)` where `F` is the unitary DFT
//! (`F[p,q] = e^{-j2πpq/N} / √N`) and `Λ(c) = diag(e^{-j2π c n²})`. The second
//! chirp may vary per subcarrier, which is how the keystream schedule enters the
//! waveform. The inverse is the conjugate transpose.
//!
//! A chirp-periodic prefix (CPP) plays the role the cyclic prefix plays in OFDM.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::waveform::Modulation;

/// Frame geometry and the fixed chirp parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    pub n: usize,
    pub ncp: usize,
    pub c1: f64,
    pub modulation: Modulation,
}

impl FrameParams {
    pub fn new(n: usize, ncp: usize, c1: f64, modulation: Modulation) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "frame length must be at least 2, got {n}"
            )));
        }
        if !c1.is_finite() {
            return Err(Error::InvalidParameter(format!("c1 must be finite, got {c1}")));
        }
        Ok(FrameParams {
            n,
            ncp,
            c1,
            modulation,
        })
    }

    /// Parameters sized for a channel profile: `c1 = (2α_max + 1) / 2N` and a
    /// prefix exactly as long as the largest path delay.
    pub fn for_channel(
        n: usize,
        alpha_max: f64,
        max_delay: usize,
        modulation: Modulation,
    ) -> Result<Self> {
        if !(alpha_max >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_max must be non-negative, got {alpha_max}"
            )));
        }
        Self::new(n, max_delay, default_c1(n, alpha_max), modulation)
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn bits_per_frame(&self) -> usize {
        self.n * self.modulation.bits_per_symbol()
    }
}

pub fn default_c1(n: usize, alpha_max: f64) -> f64 {
    (2.0 * alpha_max + 1.0) / (2.0 * n as f64)
}

/// Time-domain samples, with or without the chirp-periodic prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock {
    pub samples: Vec<Complex64>,
    pub has_prefix: bool,
}

impl SignalBlock {
    pub fn new(samples: Vec<Complex64>) -> Self {
        SignalBlock {
            samples,
            has_prefix: false,
        }
    }

    pub fn with_prefix(samples: Vec<Complex64>) -> Self {
        SignalBlock {
            samples,
            has_prefix: true,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// A length-N vector in the affine (chirp) domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolFrame(pub Vec<Complex64>);

impl SymbolFrame {
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum()
    }
}

impl Deref for SymbolFrame {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for SymbolFrame {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for SymbolFrame {
    fn from(v: Vec<Complex64>) -> Self {
        SymbolFrame(v)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_unitary(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    fft.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Unitary DFT: `X[p] = Σ_q x[q] e^{-j2πpq/N} / √N`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    fft_unitary(&mut out, false);
    out
}

/// Unitary inverse DFT (conjugate transpose of [`dft`]).
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut out = x.to_vec();
    fft_unitary(&mut out, true);
    out
}

/// `e^{-j2π c k}` for real `c` and integer-valued `k`, with the argument
/// reduced mod 1 before scaling so large `k` keeps full precision.
#[inline]
pub(crate) fn chirp_phase(c: f64, k: f64) -> Complex64 {
    let turns = (c * k).rem_euclid(1.0);
    Complex64::from_polar(1.0, -2.0 * PI * turns)
}

/// Diagonal of `Λ(c) = diag(e^{-j2π c n²})`, or its conjugate.
pub fn chirp_diag(c: f64, n: usize, conjugate: bool) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let v = chirp_phase(c, (k * k) as f64);
            if conjugate {
                v.conj()
            } else {
                v
            }
        })
        .collect()
}

/// Diagonal of `diag(e^{-j2π c[m] m²})` for a per-index chirp vector.
pub fn chirp_diag_scheduled(c: &[f64], conjugate: bool) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .map(|(k, &ck)| {
            let v = chirp_phase(ck, (k * k) as f64);
            if conjugate {
                v.conj()
            } else {
                v
            }
        })
        .collect()
}

/// Inverse DAFT with a scalar second chirp.
pub fn idaft(x: &SymbolFrame, params: &FrameParams, c2: f64) -> Result<SignalBlock> {
    idaft_scheduled(x, params, &vec![c2; params.n])
}

/// Inverse DAFT with a per-subcarrier second chirp:
/// `s[n] = Σ_m x[m] e^{j2π(c1 n² + mn/N + c2[m] m²)} / √N`.
pub fn idaft_scheduled(x: &SymbolFrame, params: &FrameParams, c2: &[f64]) -> Result<SignalBlock> {
    let n = params.n;
    if x.len() != n {
        return Err(Error::length("idaft input", n, x.len()));
    }
    if c2.len() != n {
        return Err(Error::length("idaft c2 schedule", n, c2.len()));
    }
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(chirp_diag_scheduled(c2, true))
        .map(|(v, d)| v * d)
        .collect();
    fft_unitary(&mut buf, true);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= chirp_phase(params.c1, (k * k) as f64).conj();
    }
    Ok(SignalBlock::new(buf))
}

/// Forward DAFT with a scalar second chirp.
pub fn daft(s: &SignalBlock, params: &FrameParams, c2: f64) -> Result<SymbolFrame> {
    daft_scheduled(s, params, &vec![c2; params.n])
}

/// Forward DAFT `Λ(c2) F Λ(c1) s` with a per-subcarrier second chirp.
pub fn daft_scheduled(s: &SignalBlock, params: &FrameParams, c2: &[f64]) -> Result<SymbolFrame> {
    let n = params.n;
    if s.has_prefix {
        return Err(Error::Contract(
            "daft expects a block with the prefix already removed".into(),
        ));
    }
    if s.len() != n {
        return Err(Error::length("daft input", n, s.len()));
    }
    if c2.len() != n {
        return Err(Error::length("daft c2 schedule", n, c2.len()));
    }
    let mut buf: Vec<Complex64> = s
        .samples
        .iter()
        .enumerate()
        .map(|(k, v)| v * chirp_phase(params.c1, (k * k) as f64))
        .collect();
    fft_unitary(&mut buf, false);
    for (v, d) in buf.iter_mut().zip(chirp_diag_scheduled(c2, false)) {
        *v *= d;
    }
    Ok(SymbolFrame(buf))
}

/// Phase applied to prefix sample `n` (negative) relative to `s[n + N]`.
pub fn cpp_phase(c1: f64, n_len: usize, n: i64) -> Complex64 {
    let nn = n_len as f64;
    chirp_phase(c1, nn * nn + 2.0 * nn * n as f64)
}

/// Prepends the chirp-periodic prefix `s[n] = s[n+N] e^{-j2πc1(N² + 2Nn)}`,
/// `n = -Ncp..-1`.
pub fn add_cpp(s: &SignalBlock, params: &FrameParams) -> Result<SignalBlock> {
    let n = params.n;
    if s.has_prefix {
        return Err(Error::Contract("block already carries a prefix".into()));
    }
    if s.len() != n {
        return Err(Error::length("add_cpp input", n, s.len()));
    }
    if params.ncp > n {
        return Err(Error::InvalidParameter(format!(
            "prefix length {} exceeds frame length {n}",
            params.ncp
        )));
    }
    let mut out = Vec::with_capacity(n + params.ncp);
    for k in 0..params.ncp {
        let idx = k as i64 - params.ncp as i64;
        let src = s.samples[(idx + n as i64) as usize];
        out.push(src * cpp_phase(params.c1, n, idx));
    }
    out.extend_from_slice(&s.samples);
    Ok(SignalBlock::with_prefix(out))
}

/// Drops the first `Ncp` samples.
pub fn remove_cpp(r: &SignalBlock, params: &FrameParams) -> Result<SignalBlock> {
    let expected = params.n + params.ncp;
    if r.len() != expected {
        return Err(Error::length("remove_cpp input", expected, r.len()));
    }
    if !r.has_prefix && params.ncp > 0 {
        return Err(Error::Contract("block carries no prefix".into()));
    }
    Ok(SignalBlock::new(r.samples[params.ncp..].to_vec()))
}
