//! Doubly-selective multipath channel and effective affine-domain matrices.
//!
//! Path `i` delays the transmitted block by `l_i` samples and rotates it by a
//! normalized Doppler `ν_i` (cycles per frame). Its gain is carried as
//! `h̃_i = h_i e^{-j2πν_i l_i / N}`.
//!
//! The effective matrix seen after the receiver's DAFT is
//! `Λ(c2_rx) · H0 · Λ(c2_tx)ᴴ` where `H0` is the schedule-free matrix
//! `F Λ(c1) H_t Λ(c1)ᴴ Fᴴ`. Every receiver variant differs from `H0` only by
//! diagonal unitaries, which the detector exploits.

use std::f64::consts::PI;

use faer::{c64, Mat};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::daft::{
    add_cpp, chirp_diag_scheduled, chirp_phase, daft_scheduled, idaft_scheduled, remove_cpp,
    FrameParams, SignalBlock, SymbolFrame,
};
use crate::error::{Error, Result};
use crate::keystream::{C2Schedule, Owner};

/// Tolerance on `|z mod N|` below which the kernel switches to the geometric sum.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub h_tilde: Complex64,
    pub delay: usize,
    pub nu: f64,
}

impl PathSpec {
    /// Integer Doppler part, rounding half down so that `frac ∈ (-1/2, 1/2]`.
    pub fn alpha(&self) -> i64 {
        (self.nu - 0.5).ceil() as i64
    }

    pub fn frac(&self) -> f64 {
        self.nu - self.alpha() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Bob,
    Eve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathSpec>,
    pub link: Link,
}

impl ChannelRealization {
    /// A single unit-gain path with no delay and no Doppler.
    pub fn identity(link: Link) -> Self {
        ChannelRealization {
            paths: vec![PathSpec {
                h_tilde: Complex64::new(1.0, 0.0),
                delay: 0,
                nu: 0.0,
            }],
            link,
        }
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay).max().unwrap_or(0)
    }

    pub fn with_link(mut self, link: Link) -> Self {
        self.link = link;
        self
    }

    fn check(&self, params: &FrameParams) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::InvalidParameter("channel has no paths".into()));
        }
        if self.max_delay() > params.ncp {
            return Err(Error::InvalidParameter(format!(
                "path delay {} exceeds prefix length {}",
                self.max_delay(),
                params.ncp
            )));
        }
        Ok(())
    }
}

/// Jakes-type realization: delays `0..P`, `ν_i = α_max cos θ_i` with
/// `θ_i ~ U[-π, π]`, `h_i ~ CN(0, 1/P)`.
pub fn sample_channel<R: Rng + ?Sized>(
    p: usize,
    alpha_max: f64,
    integer_only: bool,
    n: usize,
    link: Link,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if p == 0 {
        return Err(Error::InvalidParameter("path count must be at least 1".into()));
    }
    if !(alpha_max >= 0.0) || !alpha_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha_max must be finite and non-negative, got {alpha_max}"
        )));
    }
    let scale = (0.5 / p as f64).sqrt();
    let paths = (0..p)
        .map(|l| {
            let theta = rng.random_range(-PI..=PI);
            let mut nu = alpha_max * theta.cos();
            if integer_only {
                nu = nu.round();
            }
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let h = Complex64::new(re, im) * scale;
            let turns = (nu * l as f64 / n as f64).rem_euclid(1.0);
            PathSpec {
                h_tilde: h * Complex64::from_polar(1.0, -2.0 * PI * turns),
                delay: l,
                nu,
            }
        })
        .collect();
    Ok(ChannelRealization { paths, link })
}

/// Noiseless propagation of a prefixed block:
/// `r[n] = Σ_i h̃_i s[n - l_i] e^{j2πν_i n / N}`, `n = -Ncp..N-1`.
pub fn propagate(
    s: &SignalBlock,
    ch: &ChannelRealization,
    params: &FrameParams,
) -> Result<SignalBlock> {
    ch.check(params)?;
    let total = params.n + params.ncp;
    if s.len() != total {
        return Err(Error::length("channel input", total, s.len()));
    }
    let nn = params.n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for path in &ch.paths {
        for k in path.delay..total {
            let n = k as f64 - params.ncp as f64;
            let turns = (path.nu * n / nn).rem_euclid(1.0);
            out[k] += path.h_tilde * s.samples[k - path.delay] * Complex64::from_polar(1.0, 2.0 * PI * turns);
        }
    }
    Ok(SignalBlock {
        samples: out,
        has_prefix: s.has_prefix,
    })
}

/// Unit-variance circular complex Gaussian samples, `2·len` normal draws.
pub fn unit_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// Adds `√σ² · w` for a pre-drawn unit-variance noise vector `w`.
pub fn add_scaled_noise(r: &SignalBlock, noise: &[Complex64], sigma2: f64) -> Result<SignalBlock> {
    if noise.len() != r.len() {
        return Err(Error::length("noise vector", r.len(), noise.len()));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be non-negative, got {sigma2}"
        )));
    }
    let sd = sigma2.sqrt();
    Ok(SignalBlock {
        samples: r.samples.iter().zip(noise).map(|(a, w)| a + w * sd).collect(),
        has_prefix: r.has_prefix,
    })
}

/// Propagation plus white noise of variance `sigma2` per complex sample.
pub fn apply_channel<R: Rng + ?Sized>(
    s: &SignalBlock,
    ch: &ChannelRealization,
    params: &FrameParams,
    rng: &mut R,
    sigma2: f64,
) -> Result<SignalBlock> {
    let r = propagate(s, ch, params)?;
    let w = unit_noise(r.len(), rng);
    add_scaled_noise(&r, &w, sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelVariant {
    StandardAfdm,
    Bob,
    Eve,
}

#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub matrix: Mat<c64>,
    pub variant: ChannelVariant,
}

impl EffectiveChannel {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Matrix-vector product `H x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.matrix, x, false)
    }
}

pub(crate) fn mat_vec(m: &Mat<c64>, x: &[Complex64], adjoint: bool) -> Vec<Complex64> {
    let v = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let out = if adjoint { m.adjoint() * &v } else { m * &v };
    (0..out.nrows()).map(|i| out[(i, 0)]).collect()
}

/// Schedule-free matrix `H0 = F Λ(c1) H_t Λ(c1)ᴴ Fᴴ`, built column by column
/// by pushing unit symbols through the simulated chain.
pub fn base_channel(ch: &ChannelRealization, params: &FrameParams) -> Result<Mat<c64>> {
    ch.check(params)?;
    let n = params.n;
    let zeros = vec![0.0; n];
    let mut m = Mat::<c64>::zeros(n, n);
    for q in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[q] = Complex64::new(1.0, 0.0);
        let s = idaft_scheduled(&SymbolFrame(e), params, &zeros)?;
        let r = propagate(&add_cpp(&s, params)?, ch, params)?;
        let y = daft_scheduled(&remove_cpp(&r, params)?, params, &zeros)?;
        for (p, v) in y.iter().enumerate() {
            m[(p, q)] = *v;
        }
    }
    Ok(m)
}

/// `Λ(rx) · H0 · Λ(tx)ᴴ`; a missing `tx` is the identity.
pub fn rotate(h0: &Mat<c64>, rx: &[f64], tx: Option<&[f64]>) -> Result<Mat<c64>> {
    let n = h0.nrows();
    if rx.len() != n {
        return Err(Error::length("receive schedule", n, rx.len()));
    }
    let drx = chirp_diag_scheduled(rx, false);
    let dtx = match tx {
        Some(t) if t.len() != n => return Err(Error::length("transmit schedule", n, t.len())),
        Some(t) => chirp_diag_scheduled(t, true),
        None => vec![Complex64::new(1.0, 0.0); n],
    };
    Ok(Mat::from_fn(n, n, |p, q| drx[p] * h0[(p, q)] * dtx[q]))
}

/// Effective channel for a receiver using `sched_rx` against a transmitter
/// using `sched_tx`. Without a transmit schedule the Eve variant is produced:
/// her unknown rotation stays inside the symbols rather than the matrix.
pub fn effective_channel(
    ch: &ChannelRealization,
    params: &FrameParams,
    sched_rx: &C2Schedule,
    sched_tx: Option<&C2Schedule>,
) -> Result<EffectiveChannel> {
    let h0 = base_channel(ch, params)?;
    let variant = match (sched_tx, sched_rx.owner) {
        (None, _) | (_, Owner::Eve) => ChannelVariant::Eve,
        _ => ChannelVariant::Bob,
    };
    let matrix = rotate(&h0, &sched_rx.values, sched_tx.map(|s| s.values.as_slice()))?;
    Ok(EffectiveChannel { matrix, variant })
}

/// Standard AFDM effective channel with a fixed second chirp on both sides.
pub fn standard_channel(
    ch: &ChannelRealization,
    params: &FrameParams,
    c2: f64,
) -> Result<EffectiveChannel> {
    let h0 = base_channel(ch, params)?;
    let c = vec![c2; params.n];
    Ok(EffectiveChannel {
        matrix: rotate(&h0, &c, Some(&c))?,
        variant: ChannelVariant::StandardAfdm,
    })
}

/// Dirichlet-type kernel `Σ_{n<N} e^{-j2πzn/N}` with `z = p - q - ν + 2Nc1 l`.
pub fn kernel_f(p: usize, q: usize, nu: f64, l: usize, c1: f64, n: usize) -> Complex64 {
    let nn = n as f64;
    let z = p as f64 - q as f64 - nu + 2.0 * nn * c1 * l as f64;
    // Both the numerator (period 1) and denominator (period N) are
    // invariant under z -> z + N, so reduce to (-N/2, N/2].
    let mut zs = z.rem_euclid(nn);
    if zs > nn / 2.0 {
        zs -= nn;
    }
    if zs.abs() < KERNEL_TOL {
        return (0..n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * zs * k as f64 / nn))
            .sum();
    }
    let ratio = (PI * zs).sin() / (PI * zs / nn).sin();
    Complex64::from_polar(ratio, -PI * zs * (1.0 - 1.0 / nn))
}

/// Closed-form effective channel:
/// `H[p,q] = Σ_i h̃_i/N · e^{j2π(tx[q]q² - rx[p]p²)} e^{j2π(c1 l² - ql/N)} 𝓕_i[p,q]`.
pub fn analytic_channel(
    ch: &ChannelRealization,
    params: &FrameParams,
    rx: &[f64],
    tx: &[f64],
) -> Result<Mat<c64>> {
    let n = params.n;
    if rx.len() != n {
        return Err(Error::length("receive schedule", n, rx.len()));
    }
    if tx.len() != n {
        return Err(Error::length("transmit schedule", n, tx.len()));
    }
    let nn = n as f64;
    let drx = chirp_diag_scheduled(rx, false);
    let dtx = chirp_diag_scheduled(tx, true);
    let mut m = Mat::<c64>::zeros(n, n);
    for path in &ch.paths {
        let l = path.delay;
        let g = path.h_tilde / nn * chirp_phase(params.c1, (l * l) as f64).conj();
        for q in 0..n {
            let col = g * dtx[q] * chirp_phase(1.0 / nn, (q * l) as f64);
            for p in 0..n {
                m[(p, q)] += drx[p] * col * kernel_f(p, q, path.nu, l, params.c1, n);
            }
        }
    }
    Ok(m)
}

/// Adds i.i.d. `CN(0, var)` errors to every entry, modelling imperfect CSI.
pub fn perturb<R: Rng + ?Sized>(h: &Mat<c64>, var: f64, rng: &mut R) -> Result<Mat<c64>> {
    if !(var >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "CSI error variance must be non-negative, got {var}"
        )));
    }
    let sd = (var / 2.0).sqrt();
    let mut out = h.clone();
    for q in 0..h.ncols() {
        for p in 0..h.nrows() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            out[(p, q)] += Complex64::new(re * sd, im * sd);
        }
    }
    Ok(out)
}
