//! Property tests on the public API, checked against the dense oracles.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seafdm_core::channel::{analytic_channel, effective_channel, ChannelRealization, Link, PathSpec};
use seafdm_core::daft::{add_cpp, daft_scheduled, idaft_scheduled, remove_cpp, FrameParams, SignalBlock, SymbolFrame};
use seafdm_core::detection::{count_errors, demap, mmse_equalize};
use seafdm_core::keystream::{
    bias_between, build_codebook, eve_schedule, generate_schedule, C2Schedule, EveStrategy, KeystreamState, Owner,
    Polynomial,
};
use seafdm_core::security::{sinr_eve_average, sinr_eve_symbol};
use seafdm_core::waveform::{map_bits, scramble_phases};
use seafdm_core::Modulation;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn frame_and_schedule() -> impl Strategy<Value = (usize, f64, Vec<f64>, Vec<Complex64>)> {
    (2usize..96).prop_flat_map(|n| {
        (
            Just(n),
            0.0f64..1.0,
            prop::collection::vec(-1e-2f64..1e-2, n),
            complex_vec(n),
        )
    })
}

fn path() -> impl Strategy<Value = PathSpec> {
    ((-1.0f64..1.0, -1.0f64..1.0), 0usize..=3, -2.5f64..2.5).prop_map(|((a, b), delay, nu)| PathSpec {
        h_tilde: Complex64::new(a, b),
        delay,
        nu,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip_and_energy((n, c1, c2, x) in frame_and_schedule()) {
        let prm = FrameParams::new(n, 0, c1, Modulation::Qpsk).unwrap();
        let x = SymbolFrame(x);
        let s = idaft_scheduled(&x, &prm, &c2).unwrap();
        prop_assert!((s.energy() - x.energy()).abs() <= 1e-10 * (1.0 + x.energy()));
        let back = daft_scheduled(&s, &prm, &c2).unwrap();
        for (a, b) in back.iter().zip(x.iter()) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn transform_matches_entrywise_matrix((n, c1, c2, v) in frame_and_schedule()) {
        let prm = FrameParams::new(n, 0, c1, Modulation::Qpsk).unwrap();
        let got = daft_scheduled(&SignalBlock::new(v.clone()), &prm, &c2).unwrap();
        let want = common::mat_vec(&common::daft_matrix(c1, &c2), &v);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn prefix_is_chirp_periodic((n, c1, _c2, v) in frame_and_schedule(), ncp_frac in 0.0f64..1.0) {
        let ncp = ((n as f64) * ncp_frac) as usize;
        let prm = FrameParams::new(n, ncp, c1, Modulation::Qpsk).unwrap();
        let s = SignalBlock::new(v);
        let with = add_cpp(&s, &prm).unwrap();
        prop_assert_eq!(with.len(), n + ncp);
        prop_assert_eq!(&remove_cpp(&with, &prm).unwrap(), &s);
        let nn = n as f64;
        for k in 0..ncp {
            let idx = k as f64 - ncp as f64;
            let turns = (-c1 * (nn * nn + 2.0 * nn * idx)).rem_euclid(1.0);
            let expect = s.samples[(idx + nn) as usize] * common::cis(turns);
            prop_assert!((with.samples[k] - expect).norm() <= 1e-10);
        }
    }

    #[test]
    fn effective_channel_matches_dense_product(
        paths in prop::collection::vec(path(), 1..=3),
        n in prop::sample::select(vec![8usize, 16, 24]),
        seed in any::<u32>(),
    ) {
        let ch = ChannelRealization { paths, link: Link::Bob };
        let prm = FrameParams::new(n, 3, (2.0 * 2.0 + 1.0) / (2.0 * n as f64), Modulation::Qpsk).unwrap();
        let book = build_codebook(1e-3, 8).unwrap();
        let poly = Polynomial::from_exponents(&Polynomial::DEFAULT_EXPONENTS).unwrap();
        let mut ks = KeystreamState::new(poly, seed as u64 | 1).unwrap();
        let tx = generate_schedule(&mut ks, &book, n, Owner::Alice).unwrap();
        let rx = generate_schedule(&mut ks, &book, n, Owner::Bob).unwrap();
        let dense = common::effective_channel(&ch, &prm, &rx.values, &tx.values);
        let lib = effective_channel(&ch, &prm, &rx, Some(&tx)).unwrap();
        let closed = analytic_channel(&ch, &prm, &rx.values, &tx.values).unwrap();
        prop_assert!(common::max_abs_diff(&lib.matrix, &dense) <= 1e-9);
        prop_assert!(common::max_abs_diff(&closed, &dense) <= 1e-9);
    }

    #[test]
    fn schedules_stay_in_codebook(seed in 1u64..u32::MAX as u64, log_m in 1u32..5, n in 1usize..300) {
        let book = build_codebook(4.88e-5, 1 << log_m).unwrap();
        let poly = Polynomial::from_exponents(&Polynomial::DEFAULT_EXPONENTS).unwrap();
        let mut ks = KeystreamState::new(poly, seed).unwrap();
        let s = generate_schedule(&mut ks, &book, n, Owner::Alice).unwrap();
        prop_assert!(s.in_codebook(&book));
        prop_assert_eq!(ks.steps(), (n as u64) * log_m as u64);
        prop_assert!(s.values.iter().all(|v| v.abs() <= 4.88e-5));
    }

    #[test]
    fn biased_eve_has_exact_sup_norm_bias(seed in any::<u64>(), sigma in 0.0f64..1e-5, n in 1usize..200) {
        let book = build_codebook(4.88e-5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = Polynomial::from_exponents(&Polynomial::DEFAULT_EXPONENTS).unwrap();
        let mut ks = KeystreamState::new(poly, (seed as u32 | 1) as u64).unwrap();
        let alice = generate_schedule(&mut ks, &book, n, Owner::Alice).unwrap();
        let eve = eve_schedule(EveStrategy::Biased { sigma }, &alice, &book, &mut rng);
        prop_assert_eq!(eve.owner, Owner::Eve);
        let b = bias_between(&alice, &eve).unwrap();
        prop_assert!((b - sigma).abs() <= 1e-18);
        prop_assert_eq!(bias_between(&alice, &alice).unwrap(), 0.0);
    }

    #[test]
    fn scramble_phases_are_unit(values in prop::collection::vec(-1e-3f64..1e-3, 1..128)) {
        let s = C2Schedule { values, owner: Owner::Alice };
        for (q, v) in scramble_phases(&s).iter().enumerate() {
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            let want = common::cis(s.values[q] * (q * q) as f64);
            prop_assert!((v - want).norm() < 1e-9);
        }
    }

    #[test]
    fn error_count_is_a_hamming_distance(
        a in prop::collection::vec(0u8..2, 0..256),
        flips in prop::collection::vec(any::<bool>(), 256),
    ) {
        let b: Vec<u8> = a.iter().zip(&flips).map(|(x, &f)| x ^ f as u8).collect();
        let want = flips.iter().take(a.len()).filter(|&&f| f).count();
        prop_assert_eq!(count_errors(&a, &b).unwrap(), want);
        prop_assert_eq!(count_errors(&b, &a).unwrap(), want);
        prop_assert_eq!(count_errors(&a, &a).unwrap(), 0);
    }

    #[test]
    fn noiseless_mmse_recovers_symbols(paths in prop::collection::vec(path(), 1..=3), bits_seed in any::<u64>()) {
        let n = 16;
        let ch = ChannelRealization { paths, link: Link::Bob };
        let prm = FrameParams::new(n, 3, 5.0 / 32.0, Modulation::Qpsk).unwrap();
        let zeros = C2Schedule::zeros(n, Owner::Alice);
        let h = effective_channel(&ch, &prm, &zeros.clone().with_owner(Owner::Bob), Some(&zeros)).unwrap();
        // Skip near-singular draws; the detector reports those as errors.
        let s = h.matrix.singular_values().unwrap();
        prop_assume!(s.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(bits_seed);
        let bits: Vec<u8> = (0..2 * n).map(|_| rand::Rng::random_range(&mut rng, 0..2u8)).collect();
        let spec = Modulation::Qpsk.constellation();
        let x = map_bits(&bits, &spec, n).unwrap();
        let y = SymbolFrame(h.apply(&x));
        let x_hat = mmse_equalize(&h, &y, 1e-12).unwrap();
        prop_assert_eq!(demap(&x_hat, &spec), bits);
    }

    #[test]
    fn eve_sinr_never_beats_bob(n in 1usize..512, g_db in -5.0f64..35.0, c2max in 0.0f64..1.0, p in 0usize..512) {
        let g = 10f64.powf(g_db / 10.0);
        prop_assert!(sinr_eve_symbol(p, g, c2max) <= g);
        prop_assert!(sinr_eve_average(n, g, c2max) <= g * (1.0 + 1e-12));
    }
}
