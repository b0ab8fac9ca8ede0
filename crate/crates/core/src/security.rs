//! Effective SINR analytics for the legitimate receiver and the eavesdropper.
//!
//! With a uniformly random second chirp on `[-a, a]`, the residual rotation
//! `e^{j2πc2 p²}` on symbol `p` has `E|e^{j2πc2 p²} - 1|² = 2(1 - Sa(2πp²a))`,
//! which acts as interference of that power at Eve's detector.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::detection::LinkBudget;
use crate::keystream::Codebook;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sa(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `γ / (2γ(1 - Sa(2πp²c2max)) + 1)`.
pub fn sinr_eve_symbol(p: usize, gamma: f64, c2max: f64) -> f64 {
    let x = 2.0 * PI * (p as f64).powi(2) * c2max;
    gamma / (2.0 * gamma * (1.0 - sa(x)) + 1.0)
}

/// Mean of [`sinr_eve_symbol`] over `p = 0..N-1`.
///
/// Accumulates the per-symbol shortfall from `γ`, so the result is exactly
/// `γ` when nothing is lost.
pub fn sinr_eve_average(n: usize, gamma: f64, c2max: f64) -> f64 {
    let loss: f64 = (0..n).map(|p| gamma - sinr_eve_symbol(p, gamma, c2max)).sum();
    gamma - loss / n as f64
}

/// Per-symbol SINR when `c2` is uniform over the discrete codebook levels
/// instead of the continuous interval.
pub fn sinr_eve_symbol_discrete(p: usize, gamma: f64, book: &Codebook) -> f64 {
    let p2 = (p as f64).powi(2);
    let mean_cos = book
        .levels()
        .iter()
        .map(|&c| (2.0 * PI * c * p2).cos())
        .sum::<f64>()
        / book.size() as f64;
    gamma / (2.0 * gamma * (1.0 - mean_cos) + 1.0)
}

pub fn sinr_eve_average_discrete(n: usize, gamma: f64, book: &Codebook) -> f64 {
    let loss: f64 = (0..n).map(|p| gamma - sinr_eve_symbol_discrete(p, gamma, book)).sum();
    gamma - loss / n as f64
}

/// Monte Carlo estimate of symbol `p`'s SINR: draws `c2 ~ U[-c2max, c2max]`
/// and returns `1 / (E|e^{j2πc2 p²} - 1|² + 1/γ)`.
pub fn sinr_eve_measured<R: Rng + ?Sized>(
    trials: usize,
    p: usize,
    gamma: f64,
    book: &Codebook,
    rng: &mut R,
) -> f64 {
    let a = book.c2max();
    let p2 = (p as f64).powi(2);
    let interference = if a == 0.0 || p == 0 || trials == 0 {
        0.0
    } else {
        (0..trials)
            .map(|_| {
                let c2 = rng.random_range(-a..=a);
                2.0 - 2.0 * (2.0 * PI * c2 * p2).cos()
            })
            .sum::<f64>()
            / trials as f64
    };
    1.0 / (interference + 1.0 / gamma)
}

/// Bob's SINR; the schedule has no influence on it.
pub fn sinr_bob(budget: &LinkBudget) -> f64 {
    budget.snr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Formula,
    DiscreteCodebook,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrCurve {
    pub abscissa: Vec<f64>,
    pub sinr_linear: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub n: usize,
    pub gamma: f64,
    pub source: CurveSource,
}

impl SinrCurve {
    pub fn from_linear(abscissa: Vec<f64>, sinr_linear: Vec<f64>, n: usize, gamma: f64, source: CurveSource) -> Self {
        let sinr_db = sinr_linear.iter().map(|&v| to_db(v)).collect();
        SinrCurve {
            abscissa,
            sinr_linear,
            sinr_db,
            n,
            gamma,
            source,
        }
    }
}

/// Average Eve SINR against `c2max` from the closed form.
pub fn sinr_curve(n: usize, gamma: f64, c2max_values: &[f64]) -> SinrCurve {
    let lin = c2max_values.iter().map(|&c| sinr_eve_average(n, gamma, c)).collect();
    SinrCurve::from_linear(c2max_values.to_vec(), lin, n, gamma, CurveSource::Formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keystream::build_codebook;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GAMMA_25DB: f64 = 316.227_766_016_837_9;

    #[test]
    fn sa_values() {
        assert_eq!(sa(0.0), 1.0);
        assert!(sa(PI).abs() < 1e-15);
        assert!((sa(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        assert!((sa(1e-7) - (1e-7f64).sin() / 1e-7).abs() < 1e-15);
    }

    #[test]
    fn symbol_sinr_limits() {
        assert_eq!(sinr_eve_symbol(5, 10.0, 0.0), 10.0);
        assert_eq!(sinr_eve_symbol(0, 10.0, 1e-3), 10.0);
        // Sa(2π·5) = 0 exactly in the limit; ratio → γ/(2γ+1).
        let v = sinr_eve_symbol(1, 1e6, 5.0);
        assert!((v - 0.5).abs() < 1e-3);
    }

    #[test]
    fn average_endpoints() {
        assert_eq!(sinr_eve_average(1024, GAMMA_25DB, 0.0), GAMMA_25DB);
        let v = sinr_eve_average(1024, GAMMA_25DB, 5.0);
        assert!((v - 0.8076).abs() < 1e-3, "{v}");
        assert!((to_db(v) + 0.93).abs() < 0.01);
    }

    #[test]
    fn average_monotone_on_grid() {
        let grid = [0.0, 1e-7, 1e-6, 1e-5, 1e-4];
        let v: Vec<f64> = grid.iter().map(|&c| sinr_eve_average(1024, GAMMA_25DB, c)).collect();
        for w in v.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn measured_edge_cases_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = build_codebook(0.0, 4).unwrap();
        assert_eq!(sinr_eve_measured(10, 7, 100.0, &zero, &mut rng), 100.0);
        let book = build_codebook(1e-5, 4).unwrap();
        assert_eq!(sinr_eve_measured(10, 0, 100.0, &book, &mut rng), 100.0);
    }

    #[test]
    fn measured_agrees_with_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c2max in [1e-6, 1e-5] {
            let book = build_codebook(c2max, 4).unwrap();
            for p in [1, 7, 31] {
                let m = sinr_eve_measured(200_000, p, GAMMA_25DB, &book, &mut rng);
                let f = sinr_eve_symbol(p, GAMMA_25DB, c2max);
                assert!((m / f - 1.0).abs() < 0.02, "p {p} c2max {c2max}: {m} vs {f}");
            }
        }
    }

    #[test]
    fn cosine_mean_matches_sa_by_quadrature() {
        // Midpoint rule for (1/2a)∫cos(2πc p²) dc over [-a, a].
        for (p, a) in [(7usize, 1e-3), (31, 1e-4), (3, 2e-2)] {
            let k = 20_000;
            let h = 2.0 * a / k as f64;
            let q: f64 = (0..k)
                .map(|i| (2.0 * PI * (-a + (i as f64 + 0.5) * h) * (p * p) as f64).cos())
                .sum::<f64>()
                / k as f64;
            assert!((q - sa(2.0 * PI * (p * p) as f64 * a)).abs() < 1e-3);
        }
    }

    #[test]
    fn discrete_codebook_approaches_continuous() {
        let p = 31;
        let c2max = 1e-4;
        let cont = sinr_eve_symbol(p, GAMMA_25DB, c2max);
        let gaps: Vec<f64> = [4, 64, 1024]
            .iter()
            .map(|&m| {
                let book = build_codebook(c2max, m).unwrap();
                (sinr_eve_symbol_discrete(p, GAMMA_25DB, &book) - cont).abs()
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] / cont < 1e-2);
    }

    #[test]
    fn bob_sinr_examples() {
        assert_eq!(sinr_bob(&LinkBudget::new(1.0, 1.0, 1.0).unwrap()), 1.0);
        assert_eq!(sinr_bob(&LinkBudget::new(2.0, 1.0, 1.0).unwrap()), 2.0);
        let v = sinr_bob(&LinkBudget::new(1.0, 1.0, 10f64.powf(-2.5)).unwrap());
        assert!((v - 316.23).abs() < 0.01);
    }

    #[test]
    fn curve_db_consistency() {
        let c = sinr_curve(64, 100.0, &[0.0, 1e-5, 1e-3]);
        for (l, d) in c.sinr_linear.iter().zip(&c.sinr_db) {
            assert!((10.0 * l.log10() - d).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn average_never_exceeds_gamma(n in 1usize..256, g_db in -10.0f64..40.0, c2max in 0.0f64..1e-2) {
            let g = from_db(g_db);
            let v = sinr_eve_average(n, g, c2max);
            prop_assert!(v <= g * (1.0 + 1e-12));
            if n == 1 || c2max == 0.0 {
                prop_assert!((v - g).abs() <= 1e-12 * g);
            }
        }

        #[test]
        fn strict_loss_with_scrambling(n in 2usize..256, g_db in -10.0f64..40.0, c2max in 1e-3f64..1e-2) {
            let g = from_db(g_db);
            prop_assert!(sinr_eve_average(n, g, c2max) < g);
        }

        #[test]
        fn large_scrambling_bounds_symbol_sinr(p in 1usize..1024, g_db in 0.0f64..60.0, k in 10u32..40, c2max in 5.0f64..50.0) {
            let g = from_db(g_db);
            // Half-integer c2max zeroes Sa(2πp²c2max) for every p.
            prop_assert!(sinr_eve_symbol(p, g, k as f64 / 2.0) <= 0.5 + 1.0 / (4.0 * g));
            // Elsewhere 2πp²c2max ≥ 10π keeps |Sa| ≤ 1/(10π).
            let cap = 1.0 / (2.0 * (1.0 - 1.0 / (10.0 * PI)));
            prop_assert!(sinr_eve_symbol(p, g, c2max) <= cap);
        }
    }
}
