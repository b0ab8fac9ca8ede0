//! Seeded Monte Carlo engine.
//!
//! Trial `t` derives all of its randomness from `trial_seed(master, t)`, and
//! that seed is shared by every sweep point. Each trial is run once for all
//! points, so points differ only in the swept quantity (common random
//! numbers). Independent ChaCha8 streams separate the consumers so that, for
//! example, changing Eve's strategy never perturbs Bob's noise.
//!
//! Eve detects with her own guess of the schedule on both sides of the known
//! channel, `Λ_E H0 Λ_Eᴴ`, and demaps the result directly. With an all-zero
//! guess this is the schedule-free matrix and her estimate is `x ⊙ x_c`; with
//! a close guess the residual rotation is `e^{j2π(cA[q] - cE[q]) q²}`.

use std::time::Instant;

use faer::{c64, Mat};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ChannelModel, EveLink, ExperimentConfig, Refresh, Scenario};
use crate::channel::{
    add_scaled_noise, base_channel, perturb, propagate, rotate, sample_channel, unit_noise,
    ChannelRealization, EffectiveChannel, ChannelVariant, Link,
};
use crate::daft::{chirp_diag_scheduled, FrameParams, SymbolFrame};
use crate::detection::{count_errors, demap, mmse_equalize, MmseFactor};
use crate::error::{Error, Result};
use crate::keystream::{
    eve_schedule, generate_schedule, search_space_bits, Codebook, EveStrategy, KeystreamState,
    Owner, Polynomial,
};
use crate::security::{sinr_curve, SinrCurve};
use crate::waveform::{
    afdm_front_end, afdm_modulate, bob_front_end, eve_front_end, map_bits, se_afdm_modulate,
    ConstellationSpec,
};

/// Name of the pseudo-random generator, as recorded in result metadata.
pub const PRNG_NAME: &str = "ChaCha8 (rand_chacha), seeded per trial by SplitMix64";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

const STREAM_DATA: u64 = 0;
const STREAM_NOISE_BOB: u64 = 1;
const STREAM_NOISE_EVE: u64 = 2;
const STREAM_EVE_SCHEDULE: u64 = 3;
const STREAM_CSI_BOB: u64 = 4;
const STREAM_CSI_EVE: u64 = 5;

/// One SplitMix64 output for counter `master + (t+1)·φ`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Aggregated outcome of one sweep point.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: f64,
    pub bob_errors: u64,
    pub eve_errors: u64,
    pub ref_errors: Option<u64>,
    pub bit_count: u64,
    pub bob_ber: f64,
    pub eve_ber: f64,
    pub ref_ber: Option<f64>,
    /// Master seed; per-trial seeds follow from [`trial_seed`].
    pub seed: u64,
    /// Compute time summed over trials. Runtime metadata only: not written
    /// to the CSV and ignored by equality.
    #[serde(skip)]
    pub wall_ms: f64,
}

impl PartialEq for TrialRecord {
    fn eq(&self, o: &Self) -> bool {
        self.point == o.point
            && self.bob_errors == o.bob_errors
            && self.eve_errors == o.eve_errors
            && self.ref_errors == o.ref_errors
            && self.bit_count == o.bit_count
            && self.bob_ber == o.bob_ber
            && self.eve_ber == o.eve_ber
            && self.ref_ber == o.ref_ber
            && self.seed == o.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpaceRow {
    pub n: usize,
    pub m: usize,
    pub bits: f64,
}

#[derive(Debug, Clone)]
pub enum ScenarioOutput {
    Ber(Vec<TrialRecord>),
    Sinr(SinrCurve),
    SearchSpace(Vec<SearchSpaceRow>),
}

struct Point {
    value: f64,
    sigma2: f64,
    eve: EveStrategy,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    params: FrameParams,
    book: Codebook,
    poly: Polynomial,
    spec: ConstellationSpec,
    points: Vec<Point>,
    with_reference: bool,
}

#[derive(Default)]
struct PointCounts {
    bob: u64,
    eve: u64,
    reference: u64,
    nanos: u128,
}

fn sigma2_from_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        if !cfg.scenario.is_ber() {
            return Err(Error::Config(format!(
                "scenario {:?} does not produce BER records",
                cfg.scenario
            )));
        }
        let points = cfg
            .sweep
            .values
            .iter()
            .map(|&value| match cfg.scenario {
                Scenario::BiasSweep => Point {
                    value,
                    sigma2: sigma2_from_db(cfg.sweep.fixed_snr_db),
                    eve: EveStrategy::Biased { sigma: value },
                },
                _ => Point {
                    value,
                    sigma2: sigma2_from_db(value),
                    eve: cfg.eve,
                },
            })
            .collect();
        Ok(Context {
            cfg,
            params: cfg.frame_params()?,
            book: cfg.codebook()?,
            poly: cfg.polynomial()?,
            spec: cfg.frame.modulation.constellation(),
            points,
            with_reference: cfg.scenario == Scenario::BobVsAfdmBer,
        })
    }

    fn channel(&self, link: Link, rng: &mut ChaCha8Rng) -> Result<ChannelRealization> {
        let c = &self.cfg.channel;
        match c.model {
            ChannelModel::Jakes => {
                sample_channel(c.paths, c.alpha_max, c.integer_doppler, self.params.n, link, rng)
            }
            ChannelModel::Identity => Ok(ChannelRealization::identity(link)),
        }
    }

    fn run_trial(&self, t: u64) -> Result<Vec<PointCounts>> {
        let cfg = self.cfg;
        let prm = &self.params;
        let n = prm.n;
        let seed = trial_seed(cfg.seed, t);
        let mut rng = stream(seed, STREAM_DATA);

        let mut ks = KeystreamState::new(self.poly, cfg.keystream.seed)?;
        if cfg.keystream.refresh == Refresh::PerFrame {
            ks.advance(t * n as u64 * self.book.index_bits() as u64);
        }
        let alice = generate_schedule(&mut ks, &self.book, n, Owner::Alice)?;
        let bob = alice.clone().with_owner(Owner::Bob);

        let bits: Vec<u8> = (0..prm.bits_per_frame()).map(|_| rng.random_range(0..2u8)).collect();
        let x = map_bits(&bits, &self.spec, n)?;

        let shared = cfg.channel.eve_link == EveLink::Shared;
        let ch_b = self.channel(Link::Bob, &mut rng)?;
        let ch_e = if shared {
            ch_b.clone().with_link(Link::Eve)
        } else {
            self.channel(Link::Eve, &mut rng)?
        };
        let total = n + prm.ncp;
        let w_b = unit_noise(total, &mut stream(seed, STREAM_NOISE_BOB));
        let w_e = if shared {
            w_b.clone()
        } else {
            unit_noise(total, &mut stream(seed, STREAM_NOISE_EVE))
        };

        let s_a = se_afdm_modulate(&x, prm, &alice)?;
        let r_b = propagate(&s_a, &ch_b, prm)?;
        let r_e = propagate(&s_a, &ch_e, prm)?;
        let r_ref = if self.with_reference {
            Some(propagate(&afdm_modulate(&x, prm, cfg.afdm_c2)?, &ch_b, prm)?)
        } else {
            None
        };

        let h0_b = base_channel(&ch_b, prm)?;
        let h0_e = if shared { None } else { Some(base_channel(&ch_e, prm)?) };
        let csi = cfg.csi_error_var > 0.0;
        let gram = |h: &Mat<c64>| h * h.adjoint();
        let gram_b = if csi { None } else { Some(gram(&h0_b)) };
        let gram_e = match (&h0_e, csi) {
            (Some(h), false) => Some(gram(h)),
            _ => None,
        };

        let lam_b = chirp_diag_scheduled(&bob.values, false);
        let lam_ref = chirp_diag_scheduled(&vec![cfg.afdm_c2; n], false);

        let mut factors: Option<(f64, MmseFactor, Option<MmseFactor>)> = None;
        let mut out = Vec::with_capacity(self.points.len());
        for pt in &self.points {
            let start = Instant::now();
            let sched_e = eve_schedule(pt.eve, &alice, &self.book, &mut stream(seed, STREAM_EVE_SCHEDULE));
            let y_b = bob_front_end(&add_scaled_noise(&r_b, &w_b, pt.sigma2)?, prm, &bob)?;
            let y_e = eve_front_end(&add_scaled_noise(&r_e, &w_e, pt.sigma2)?, prm, &sched_e)?;
            let y_ref = match &r_ref {
                Some(r) => Some(afdm_front_end(&add_scaled_noise(r, &w_b, pt.sigma2)?, prm, cfg.afdm_c2)?),
                None => None,
            };
            let lam_e = chirp_diag_scheduled(&sched_e.values, false);

            let (xb, xe, xr) = if csi {
                // Bob and the reference receiver share one error draw.
                let h_e0 = h0_e.as_ref().unwrap_or(&h0_b);
                let known = |rx: &[f64], tx: Option<&[f64]>, h0: &Mat<c64>, id: u64, variant| -> Result<EffectiveChannel> {
                    let h = rotate(h0, rx, tx)?;
                    Ok(EffectiveChannel {
                        matrix: perturb(&h, cfg.csi_error_var, &mut stream(seed, id))?,
                        variant,
                    })
                };
                let hb = known(&bob.values, Some(&bob.values), &h0_b, STREAM_CSI_BOB, ChannelVariant::Bob)?;
                let he = known(&sched_e.values, Some(&sched_e.values), h_e0, STREAM_CSI_EVE, ChannelVariant::Eve)?;
                let xb = mmse_equalize(&hb, &y_b, pt.sigma2)?;
                let xe = mmse_equalize(&he, &y_e, pt.sigma2)?;
                let xr = match &y_ref {
                    Some(y) => {
                        let c = vec![cfg.afdm_c2; n];
                        let hr = known(&c, Some(&c), &h0_b, STREAM_CSI_BOB, ChannelVariant::StandardAfdm)?;
                        Some(mmse_equalize(&hr, y, pt.sigma2)?)
                    }
                    None => None,
                };
                (xb, xe, xr)
            } else {
                let stale = !matches!(&factors, Some((s2, _, _)) if *s2 == pt.sigma2);
                if stale {
                    let fb = MmseFactor::with_gram(h0_b.clone(), gram_b.as_ref().unwrap(), pt.sigma2)?;
                    let fe = match (&h0_e, &gram_e) {
                        (Some(h), Some(g)) => Some(MmseFactor::with_gram(h.clone(), g, pt.sigma2)?),
                        _ => None,
                    };
                    factors = Some((pt.sigma2, fb, fe));
                }
                let (_, fb, fe) = factors.as_ref().unwrap();
                let fe = fe.as_ref().unwrap_or(fb);
                let xb = fb.equalize_rotated(&y_b, Some(&lam_b), Some(&lam_b))?;
                let xe = fe.equalize_rotated(&y_e, Some(&lam_e), Some(&lam_e))?;
                let xr = match &y_ref {
                    Some(y) => Some(fb.equalize_rotated(y, Some(&lam_ref), Some(&lam_ref))?),
                    None => None,
                };
                (xb, xe, xr)
            };

            let errors = |xh: &SymbolFrame| count_errors(&demap(xh, &self.spec), &bits);
            out.push(PointCounts {
                bob: errors(&xb)? as u64,
                eve: errors(&xe)? as u64,
                reference: match &xr {
                    Some(v) => errors(v)? as u64,
                    None => 0,
                },
                nanos: start.elapsed().as_nanos(),
            });
        }
        Ok(out)
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs a BER scenario and returns one record per sweep point.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let ctx = Context::new(cfg)?;
    let per_trial: Vec<Vec<PointCounts>> = with_pool(cfg.workers, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| ctx.run_trial(t))
            .collect::<Result<Vec<_>>>()
    })??;

    let bits = (cfg.trials * ctx.params.bits_per_frame()) as u64;
    let records = ctx
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let mut acc = PointCounts::default();
            for trial in &per_trial {
                let c = &trial[i];
                acc.bob += c.bob;
                acc.eve += c.eve;
                acc.reference += c.reference;
                acc.nanos += c.nanos;
            }
            let ber = |e: u64| e as f64 / bits as f64;
            TrialRecord {
                point: pt.value,
                bob_errors: acc.bob,
                eve_errors: acc.eve,
                ref_errors: ctx.with_reference.then_some(acc.reference),
                bit_count: bits,
                bob_ber: ber(acc.bob),
                eve_ber: ber(acc.eve),
                ref_ber: ctx.with_reference.then(|| ber(acc.reference)),
                seed: cfg.seed,
                wall_ms: acc.nanos as f64 / 1e6,
            }
        })
        .collect();
    Ok(records)
}

/// Eve's BER against the sup-norm bias between her schedule and Alice's.
pub fn run_bias_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    if cfg.scenario != Scenario::BiasSweep {
        return Err(Error::Config(format!(
            "bias sweep requires scenario bias-sweep, got {:?}",
            cfg.scenario
        )));
    }
    run_scenario(cfg)
}

/// Dispatches on the configured scenario.
pub fn run(cfg: &ExperimentConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::SinrVsC2max => Ok(ScenarioOutput::Sinr(sinr_curve(
            cfg.frame.n,
            sigma2_from_db(-cfg.sweep.fixed_snr_db),
            &cfg.sweep.values,
        ))),
        Scenario::SearchSpace => {
            let book = cfg.codebook()?;
            let n = cfg.frame.n;
            Ok(ScenarioOutput::SearchSpace(vec![SearchSpaceRow {
                n,
                m: book.size(),
                bits: search_space_bits(&book, n),
            }]))
        }
        _ => run_scenario(cfg).map(ScenarioOutput::Ber),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::preset;

    fn small(scenario: Scenario) -> ExperimentConfig {
        let mut cfg = preset("bob-vs-afdm").unwrap();
        cfg.scenario = scenario;
        cfg.frame.n = 16;
        cfg.trials = 6;
        cfg.sweep.values = vec![0.0, 20.0];
        cfg
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|t| trial_seed(42, t)).collect();
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), a.len());
        assert_eq!(trial_seed(42, 3), a[3]);
        assert_ne!(trial_seed(43, 3), a[3]);
    }

    #[test]
    fn noiseless_identity_channel_is_error_free() {
        let mut cfg = small(Scenario::EveBer);
        cfg.channel.model = ChannelModel::Identity;
        cfg.trials = 10;
        cfg.sweep.values = vec![60.0];
        let recs = run_scenario(&cfg).unwrap();
        assert_eq!(recs[0].bob_errors, 0);
        assert_eq!(recs[0].bit_count, 10 * 32);
    }

    #[test]
    fn reference_only_for_afdm_comparison() {
        let recs = run_scenario(&small(Scenario::BobVsAfdmBer)).unwrap();
        assert!(recs.iter().all(|r| r.ref_errors.is_some()));
        // Noiseless point: both links decode perfectly.
        assert_eq!(recs[1].point, 20.0);
        let r = &recs[1];
        assert!(r.bob_ber < 0.05 && r.ref_ber.unwrap() < 0.05);
        let recs = run_scenario(&small(Scenario::EveBer)).unwrap();
        assert!(recs.iter().all(|r| r.ref_errors.is_none()));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small(Scenario::EveBer);
        let a = run_scenario(&ExperimentConfig { workers: 1, ..cfg.clone() }).unwrap();
        let b = run_scenario(&ExperimentConfig { workers: 3, ..cfg }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbiased_eve_matches_bob_on_shared_link() {
        let mut cfg = small(Scenario::BiasSweep);
        cfg.channel.eve_link = EveLink::Shared;
        cfg.sweep.values = vec![0.0];
        cfg.sweep.fixed_snr_db = 5.0;
        let recs = run_bias_sweep(&cfg).unwrap();
        assert_eq!(recs[0].eve_errors, recs[0].bob_errors);
        assert!(recs[0].bob_errors > 0);
    }

    #[test]
    fn csi_errors_degrade_bob() {
        let mut cfg = small(Scenario::CsiErrorBer);
        cfg.sweep.values = vec![30.0];
        cfg.trials = 20;
        let clean = run_scenario(&ExperimentConfig { csi_error_var: 0.0, ..cfg.clone() }).unwrap();
        let noisy = run_scenario(&ExperimentConfig { csi_error_var: 0.05, ..cfg }).unwrap();
        assert!(noisy[0].bob_errors > clean[0].bob_errors);
    }

    #[test]
    fn non_ber_scenarios() {
        let cfg = preset("search-space").unwrap();
        match run(&cfg).unwrap() {
            ScenarioOutput::SearchSpace(rows) => assert_eq!(rows[0].bits, 128.0),
            other => panic!("{other:?}"),
        }
        assert!(run_scenario(&cfg).is_err());
        match run(&preset("sinr-curve").unwrap()).unwrap() {
            ScenarioOutput::Sinr(c) => assert_eq!(c.sinr_linear.len(), c.abscissa.len()),
            other => panic!("{other:?}"),
        }
        assert!(run_bias_sweep(&small(Scenario::EveBer)).is_err());
    }

    #[test]
    fn bit_count_matches_configuration() {
        let cfg = small(Scenario::EveBer);
        for r in run_scenario(&cfg).unwrap() {
            assert_eq!(r.bit_count, 6 * 16 * 2);
            assert!(r.bob_ber <= 1.0 && r.eve_ber <= 1.0);
        }
    }
}
