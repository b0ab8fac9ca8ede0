//! Keystream-driven chirp schedules.
//!
//! Alice and Bob each run a Fibonacci LFSR from a shared seed. Every subcarrier
//! consumes `log2(M)` keystream bits, read most-significant-bit first, which
//! index a uniform codebook over `[-c2max, c2max]`. Eve knows the codebook but
//! not the register, so she has to guess the schedule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feedback polynomial `x^d + Σ c_k x^k` of a Fibonacci LFSR.
///
/// `taps` holds the low coefficients: bit `k` is `c_k` for `k < d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Polynomial {
    degree: u32,
    taps: u64,
}

impl Polynomial {
    /// `x^32 + x^22 + x^2 + x + 1`, primitive, period `2^32 - 1`.
    pub const DEFAULT_EXPONENTS: [u32; 5] = [32, 22, 2, 1, 0];

    pub fn from_exponents(exponents: &[u32]) -> Result<Self> {
        let degree = exponents.iter().copied().max().ok_or_else(|| {
            Error::InvalidParameter("polynomial needs at least one exponent".into())
        })?;
        if !(1..=64).contains(&degree) {
            return Err(Error::InvalidParameter(format!(
                "LFSR degree must be in 1..=64, got {degree}"
            )));
        }
        if !exponents.contains(&0) {
            return Err(Error::InvalidParameter(
                "feedback polynomial must have a constant term".into(),
            ));
        }
        let mut taps = 0u64;
        for &e in exponents {
            if e < degree {
                taps |= 1 << e;
            }
        }
        Ok(Polynomial { degree, taps })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> u64 {
        self.taps
    }

    pub fn exponents(&self) -> Vec<u32> {
        let mut out = vec![self.degree];
        out.extend((0..self.degree).rev().filter(|&k| self.taps >> k & 1 == 1));
        out
    }

    fn state_mask(&self) -> u64 {
        if self.degree == 64 {
            u64::MAX
        } else {
            (1u64 << self.degree) - 1
        }
    }
}

impl Default for Polynomial {
    fn default() -> Self {
        Polynomial::from_exponents(&Self::DEFAULT_EXPONENTS).unwrap()
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                e => format!("x^{e}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Linear map over GF(2)^d, row `i` selects the old bits that XOR into bit `i`.
#[derive(Clone)]
struct Gf2Matrix(Vec<u64>);

impl Gf2Matrix {
    fn step(poly: &Polynomial) -> Self {
        let d = poly.degree as usize;
        let mut rows = vec![0u64; d];
        for (i, row) in rows.iter_mut().enumerate().take(d - 1) {
            *row = 1 << (i + 1);
        }
        rows[d - 1] = poly.taps;
        Gf2Matrix(rows)
    }

    fn identity(d: usize) -> Self {
        Gf2Matrix((0..d).map(|i| 1u64 << i).collect())
    }

    fn apply(&self, v: u64) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, row)| acc | (((row & v).count_ones() as u64) & 1) << i)
    }

    /// `self ∘ other`: apply `other` first.
    fn compose(&self, other: &Gf2Matrix) -> Gf2Matrix {
        let rows = self
            .0
            .iter()
            .map(|&row| {
                let mut acc = 0u64;
                let mut bits = row;
                while bits != 0 {
                    let j = bits.trailing_zeros() as usize;
                    acc ^= other.0[j];
                    bits &= bits - 1;
                }
                acc
            })
            .collect();
        Gf2Matrix(rows)
    }
}

/// Running Fibonacci LFSR. Bit `i` of `state` is `a[t + i]`; the output bit is
/// `a[t]` and the recurrence is `a[t + d] = Σ c_k a[t + k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeystreamState {
    poly: Polynomial,
    state: u64,
    steps: u64,
}

impl KeystreamState {
    pub fn new(poly: Polynomial, seed: u64) -> Result<Self> {
        if seed & !poly.state_mask() != 0 {
            return Err(Error::InvalidParameter(format!(
                "seed {seed:#x} does not fit in a degree-{} register",
                poly.degree
            )));
        }
        if seed == 0 {
            return Err(Error::DegenerateKeystream);
        }
        Ok(KeystreamState {
            poly,
            state: seed,
            steps: 0,
        })
    }

    pub fn polynomial(&self) -> Polynomial {
        self.poly
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Total number of bits emitted since construction (including jumps).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        let out = (self.state & 1) as u8;
        let fb = (self.state & self.poly.taps).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | fb << (self.poly.degree - 1);
        self.steps += 1;
        out
    }

    pub fn next_bits(&mut self, k: usize) -> Result<Vec<u8>> {
        if k == 0 {
            return Err(Error::InvalidParameter("must request at least one bit".into()));
        }
        if self.state == 0 {
            return Err(Error::DegenerateKeystream);
        }
        Ok((0..k).map(|_| self.next_bit()).collect())
    }

    /// Reads `width` bits most-significant first as an unsigned integer.
    pub fn next_index(&mut self, width: u32) -> usize {
        (0..width).fold(0usize, |acc, _| acc << 1 | self.next_bit() as usize)
    }

    /// Jumps the register forward by `k` steps in O(d³ log k) bit operations.
    pub fn advance(&mut self, k: u64) {
        let d = self.poly.degree as usize;
        let mut result = Gf2Matrix::identity(d);
        let mut base = Gf2Matrix::step(&self.poly);
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = base.compose(&result);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        self.state = result.apply(self.state);
        self.steps += k;
    }
}

/// Uniform grid of `M` chirp values over `[-c2max, c2max]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    c2max: f64,
    levels: Vec<f64>,
}

impl Codebook {
    pub fn c2max(&self) -> f64 {
        self.c2max
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn size(&self) -> usize {
        self.levels.len()
    }

    /// Keystream bits consumed per subcarrier.
    pub fn index_bits(&self) -> u32 {
        self.levels.len().trailing_zeros()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.levels.iter().any(|&l| l == v)
    }
}

pub fn build_codebook(c2max: f64, m: usize) -> Result<Codebook> {
    if !(c2max >= 0.0) || !c2max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "c2max must be finite and non-negative, got {c2max}"
        )));
    }
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "codebook size must be a power of two ≥ 2, got {m}"
        )));
    }
    let span = (m - 1) as f64;
    // Upper half computed directly, lower half mirrored so the grid is
    // exactly symmetric and hits ±c2max.
    let upper: Vec<f64> = (m / 2..m)
        .map(|k| c2max * ((2.0 * k as f64 - span) / span))
        .collect();
    let levels = upper.iter().rev().map(|v| -v).chain(upper.iter().copied()).collect();
    Ok(Codebook { c2max, levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Alice,
    Bob,
    Eve,
}

/// Per-subcarrier second chirp values.
#[derive(Debug, Clone, PartialEq)]
pub struct C2Schedule {
    pub values: Vec<f64>,
    pub owner: Owner,
}

impl C2Schedule {
    pub fn zeros(n: usize, owner: Owner) -> Self {
        Self::constant(n, 0.0, owner)
    }

    pub fn constant(n: usize, c2: f64, owner: Owner) -> Self {
        C2Schedule {
            values: vec![c2; n],
            owner,
        }
    }

    pub fn with_owner(mut self, owner: Owner) -> Self {
        self.owner = owner;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn in_codebook(&self, book: &Codebook) -> bool {
        self.values.iter().all(|&v| book.contains(v))
    }
}

/// Draws `n` codebook indices from the keystream, `log2(M)` bits each.
pub fn generate_schedule(
    state: &mut KeystreamState,
    book: &Codebook,
    n: usize,
    owner: Owner,
) -> Result<C2Schedule> {
    if state.state() == 0 {
        return Err(Error::DegenerateKeystream);
    }
    let width = book.index_bits();
    let values = (0..n)
        .map(|_| book.levels[state.next_index(width)])
        .collect();
    Ok(C2Schedule { values, owner })
}

/// `max_m |a[m] - b[m]|`.
pub fn bias_between(a: &C2Schedule, b: &C2Schedule) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::length("schedule", a.len(), b.len()));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Base-2 logarithm of the brute-force schedule space `M^N`.
pub fn search_space_bits(book: &Codebook, n: usize) -> f64 {
    n as f64 * (book.size() as f64).log2()
}

/// How Eve chooses her de-chirping schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EveStrategy {
    /// No de-chirping attempt.
    Zeros,
    /// Independent uniform codebook draws per subcarrier.
    Random,
    /// Alice's schedule perturbed so that the sup-norm bias equals `sigma`.
    Biased { sigma: f64 },
}

pub fn eve_schedule<R: Rng + ?Sized>(
    strategy: EveStrategy,
    alice: &C2Schedule,
    book: &Codebook,
    rng: &mut R,
) -> C2Schedule {
    let n = alice.len();
    let values = match strategy {
        EveStrategy::Zeros => vec![0.0; n],
        EveStrategy::Random => (0..n)
            .map(|_| book.levels[rng.random_range(0..book.size())])
            .collect(),
        EveStrategy::Biased { sigma } => {
            let mut offsets: Vec<f64> = (0..n)
                .map(|_| {
                    if sigma > 0.0 {
                        rng.random_range(-sigma..=sigma)
                    } else {
                        0.0
                    }
                })
                .collect();
            if n > 0 {
                let k = rng.random_range(0..n);
                offsets[k] = if rng.random::<bool>() { sigma } else { -sigma };
            }
            alice
                .values
                .iter()
                .zip(offsets)
                .map(|(a, o)| a + o)
                .collect()
        }
    };
    C2Schedule {
        values,
        owner: Owner::Eve,
    }
}
