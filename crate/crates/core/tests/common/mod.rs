//! Dense-matrix oracles shared by the integration tests. Everything here is
//! built entry by entry from the defining formulas, independent of the FFT
//! and column-by-column routes used by the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use faer::{c64, Mat};
use seafdm_core::channel::ChannelRealization;
use seafdm_core::daft::FrameParams;

pub fn cis(turns: f64) -> c64 {
    c64::from_polar(1.0, 2.0 * PI * turns)
}

/// `F[p,q] = e^{-j2πpq/N} / √N`.
pub fn dft_matrix(n: usize) -> Mat<c64> {
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |p, q| cis(-(((p * q) % n) as f64) / n as f64) * s)
}

/// `diag(e^{-j2π c[k] k²})`.
pub fn chirp_matrix(c: &[f64]) -> Mat<c64> {
    let n = c.len();
    Mat::from_fn(n, n, |p, q| {
        if p == q {
            cis(-c[p] * (p * p) as f64)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// `A[p,q] = e^{-j2π c2[p] p²} e^{-j2πpq/N} e^{-j2π c1 q²} / √N`, entry by entry.
pub fn daft_matrix(c1: f64, c2: &[f64]) -> Mat<c64> {
    let n = c2.len();
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |p, q| {
        let turns = c2[p] * (p * p) as f64 + ((p * q) % n) as f64 / n as f64 + c1 * (q * q) as f64;
        cis(-turns.rem_euclid(1.0)) * s
    })
}

/// Cyclic shift `(Π^l s)[n] = s[(n - l) mod N]`.
pub fn shift_matrix(n: usize, l: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |p, q| {
        if q == (p + n - l % n) % n {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// `Δ = diag(e^{j2πνn/N})`.
pub fn doppler_matrix(n: usize, nu: f64) -> Mat<c64> {
    Mat::from_fn(n, n, |p, q| {
        if p == q {
            cis(nu * p as f64 / n as f64)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Prefix correction: `e^{-j2πc1(N² - 2N(l - n))}` for `n < l`, else 1.
pub fn gamma_matrix(n: usize, l: usize, c1: f64) -> Mat<c64> {
    let nn = n as f64;
    Mat::from_fn(n, n, |p, q| {
        if p != q {
            c64::new(0.0, 0.0)
        } else if p < l {
            cis(-c1 * (nn * nn - 2.0 * nn * (l as f64 - p as f64)))
        } else {
            c64::new(1.0, 0.0)
        }
    })
}

/// `H_t = Σ_i h̃_i Γ_i Δ_i Π^{l_i}`.
pub fn time_channel(ch: &ChannelRealization, prm: &FrameParams) -> Mat<c64> {
    let n = prm.n;
    let mut h = Mat::<c64>::zeros(n, n);
    for path in &ch.paths {
        let term = gamma_matrix(n, path.delay, prm.c1)
            * doppler_matrix(n, path.nu)
            * shift_matrix(n, path.delay);
        h += Mat::from_fn(n, n, |p, q| term[(p, q)] * path.h_tilde);
    }
    h
}

/// `Λ(rx) F Λ(c1) H_t Λ(c1)ᴴ Fᴴ Λ(tx)ᴴ`.
pub fn effective_channel(ch: &ChannelRealization, prm: &FrameParams, rx: &[f64], tx: &[f64]) -> Mat<c64> {
    daft_matrix(prm.c1, rx) * time_channel(ch, prm) * daft_matrix(prm.c1, tx).adjoint()
}

pub fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut d: f64 = 0.0;
    for q in 0..a.ncols() {
        for p in 0..a.nrows() {
            d = d.max((a[(p, q)] - b[(p, q)]).norm());
        }
    }
    d
}

pub fn mat_vec(m: &Mat<c64>, x: &[c64]) -> Vec<c64> {
    (0..m.nrows())
        .map(|p| (0..m.ncols()).map(|q| m[(p, q)] * x[q]).sum())
        .collect()
}

/// Two-sided binomial standard error of a difference of two BER estimates.
pub fn combined_se(p1: f64, p2: f64, bits: u64) -> f64 {
    let n = bits as f64;
    (p1 * (1.0 - p1) / n + p2 * (1.0 - p2) / n).sqrt()
}
