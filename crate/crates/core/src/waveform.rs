//! Constellation mapping, the SE-AFDM transmitter and the receiver front-ends.
//!
//! Alice pre-rotates subcarrier `m` by `e^{j2π c2A[m] m²}` before the usual
//! AFDM chain. A receiver removes the prefix, applies `F Λ(c1)` and then its own
//! de-chirp `Λ(c2_rx)`. When the receive schedule matches Alice's the rotation
//! cancels; otherwise every symbol `q ≥ 1` keeps a residual phase.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::daft::{
    add_cpp, daft_scheduled, idaft, idaft_scheduled, remove_cpp, FrameParams, SignalBlock,
    SymbolFrame,
};
use crate::error::{Error, Result};
use crate::keystream::{C2Schedule, Owner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    #[default]
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn constellation(self) -> ConstellationSpec {
        match self {
            Modulation::Qpsk => ConstellationSpec::qpsk(),
            Modulation::Qam16 => ConstellationSpec::qam16(),
        }
    }
}

/// Gray-labelled point set with unit average energy.
///
/// `points[i]` carries the label `i`, read most-significant bit first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    pub name: &'static str,
    pub points: Vec<Complex64>,
    pub bits_per_symbol: usize,
}

impl ConstellationSpec {
    /// 00 → (1+j), 01 → (−1+j), 11 → (−1−j), 10 → (1−j), scaled by 1/√2.
    pub fn qpsk() -> Self {
        let s = FRAC_1_SQRT_2;
        ConstellationSpec {
            name: "qpsk",
            points: vec![
                Complex64::new(s, s),
                Complex64::new(-s, s),
                Complex64::new(s, -s),
                Complex64::new(-s, -s),
            ],
            bits_per_symbol: 2,
        }
    }

    /// Square 16-QAM: the first bit pair Gray-codes the in-phase level and the
    /// second pair the quadrature level (00 → −3, 01 → −1, 11 → +1, 10 → +3).
    pub fn qam16() -> Self {
        let level = |b: usize| match b {
            0b00 => -3.0,
            0b01 => -1.0,
            0b11 => 1.0,
            _ => 3.0,
        };
        let scale = 1.0 / 10f64.sqrt();
        let points = (0..16)
            .map(|label| Complex64::new(level(label >> 2) * scale, level(label & 3) * scale))
            .collect();
        ConstellationSpec {
            name: "16qam",
            points,
            bits_per_symbol: 4,
        }
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Index of the nearest point; exact ties resolve to the lowest index.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn label_bits(&self, index: usize) -> impl Iterator<Item = u8> + '_ {
        (0..self.bits_per_symbol)
            .rev()
            .map(move |k| (index >> k & 1) as u8)
    }
}

pub fn map_bits(bits: &[u8], spec: &ConstellationSpec, n: usize) -> Result<SymbolFrame> {
    let k = spec.bits_per_symbol;
    if bits.len() != n * k {
        return Err(Error::length("bit vector", n * k, bits.len()));
    }
    let symbols = bits
        .chunks_exact(k)
        .map(|chunk| {
            let idx = chunk
                .iter()
                .fold(0usize, |acc, &b| acc << 1 | (b & 1) as usize);
            spec.points[idx]
        })
        .collect();
    Ok(SymbolFrame(symbols))
}

/// `x_c[q] = e^{j2π c2[q] q²}`, the rotation an un-synchronized receiver sees.
pub fn scramble_phases(sched: &C2Schedule) -> Vec<Complex64> {
    sched
        .values
        .iter()
        .enumerate()
        .map(|(q, &c)| {
            let turns = (c * (q * q) as f64).rem_euclid(1.0);
            Complex64::from_polar(1.0, 2.0 * PI * turns)
        })
        .collect()
}

fn expect_owner(sched: &C2Schedule, owner: Owner, n: usize) -> Result<()> {
    if sched.owner != owner {
        return Err(Error::Contract(format!(
            "schedule belongs to {:?}, expected {:?}",
            sched.owner, owner
        )));
    }
    if sched.len() != n {
        return Err(Error::length("c2 schedule", n, sched.len()));
    }
    Ok(())
}

/// Alice's transmit chain, prefix included:
/// `s_A[n] = Σ_m x[m] e^{j2π(c1 n² + c2A[m] m² + mn/N)} / √N`, `n = -Ncp..N-1`.
pub fn se_afdm_modulate(
    x: &SymbolFrame,
    params: &FrameParams,
    sched: &C2Schedule,
) -> Result<SignalBlock> {
    expect_owner(sched, Owner::Alice, params.n)?;
    let s = idaft_scheduled(x, params, &sched.values)?;
    add_cpp(&s, params)
}

/// Standard AFDM transmitter with a fixed second chirp.
pub fn afdm_modulate(x: &SymbolFrame, params: &FrameParams, c2: f64) -> Result<SignalBlock> {
    let s = idaft(x, params, c2)?;
    add_cpp(&s, params)
}

fn front_end(r: &SignalBlock, params: &FrameParams, c2: &[f64]) -> Result<SymbolFrame> {
    let stripped = remove_cpp(r, params)?;
    daft_scheduled(&stripped, params, c2)
}

/// `y_B = Λ(c2B) F Λ(c1) · remove_cpp(r)`.
pub fn bob_front_end(
    r: &SignalBlock,
    params: &FrameParams,
    sched_b: &C2Schedule,
) -> Result<SymbolFrame> {
    expect_owner(sched_b, Owner::Bob, params.n)?;
    front_end(r, params, &sched_b.values)
}

/// `y_E = Λ(c2E) F Λ(c1) · remove_cpp(r)`.
pub fn eve_front_end(
    r: &SignalBlock,
    params: &FrameParams,
    sched_e: &C2Schedule,
) -> Result<SymbolFrame> {
    expect_owner(sched_e, Owner::Eve, params.n)?;
    front_end(r, params, &sched_e.values)
}

pub fn afdm_front_end(r: &SignalBlock, params: &FrameParams, c2: f64) -> Result<SymbolFrame> {
    front_end(r, params, &vec![c2; params.n])
}
