//! Experiment configuration, read from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::daft::{default_c1, FrameParams};
use crate::error::{Error, Result};
use crate::keystream::{build_codebook, Codebook, EveStrategy, Polynomial};
use crate::waveform::Modulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Bob's SE-AFDM BER against plain AFDM on identical realizations.
    BobVsAfdmBer,
    /// Bob and Eve BER against SNR.
    EveBer,
    /// Closed-form average Eve SINR against `c2max`.
    SinrVsC2max,
    /// BER against SNR with imperfect channel knowledge at both receivers.
    CsiErrorBer,
    /// Eve BER against the sup-norm bias of her schedule.
    BiasSweep,
    /// Brute-force schedule space size in bits.
    SearchSpace,
}

impl Scenario {
    pub fn is_ber(self) -> bool {
        !matches!(self, Scenario::SinrVsC2max | Scenario::SearchSpace)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n: usize,
    /// Defaults to the largest path delay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ncp: Option<usize>,
    /// Defaults to `(2α_max + 1) / 2N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    pub modulation: Modulation,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            n: 64,
            ncp: None,
            c1: None,
            modulation: Modulation::Qpsk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub c2max: f64,
    pub m: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig { c2max: 4.88e-5, m: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refresh {
    /// Frame `t` uses keystream bits `t·N·log2(M) ..`.
    PerFrame,
    /// Every frame reuses the first schedule.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeystreamConfig {
    /// Exponents of the feedback polynomial, constant term included.
    pub polynomial: Vec<u32>,
    pub seed: u64,
    pub refresh: Refresh,
}

impl Default for KeystreamConfig {
    fn default() -> Self {
        KeystreamConfig {
            polynomial: Polynomial::DEFAULT_EXPONENTS.to_vec(),
            seed: 0xACE1,
            refresh: Refresh::PerFrame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    Jakes,
    /// One unit path, no delay, no Doppler.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EveLink {
    /// Eve draws her own channel and noise.
    Independent,
    /// Eve observes exactly what Bob observes.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub paths: usize,
    pub alpha_max: f64,
    pub integer_doppler: bool,
    pub model: ChannelModel,
    pub eve_link: EveLink,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            paths: 3,
            alpha_max: 2.0,
            integer_doppler: false,
            model: ChannelModel::Jakes,
            eve_link: EveLink::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// SNR in dB, `c2max`, or bias `σ` depending on the scenario.
    pub values: Vec<f64>,
    /// SNR used when the sweep variable is not the SNR.
    pub fixed_snr_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            values: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            fixed_snr_db: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Frames per sweep point.
    pub trials: usize,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Variance of the complex Gaussian error added to each known channel entry.
    pub csi_error_var: f64,
    /// Second chirp of the plain AFDM reference link.
    pub afdm_c2: f64,
    pub frame: FrameConfig,
    pub codebook: CodebookConfig,
    pub keystream: KeystreamConfig,
    pub channel: ChannelConfig,
    pub eve: EveStrategy,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::EveBer,
            seed: 1,
            trials: 200,
            workers: 0,
            csi_error_var: 0.0,
            afdm_c2: 0.0,
            frame: FrameConfig::default(),
            codebook: CodebookConfig::default(),
            keystream: KeystreamConfig::default(),
            channel: ChannelConfig::default(),
            eve: EveStrategy::Zeros,
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.sweep.values.is_empty() && self.scenario != Scenario::SearchSpace {
            return bad("sweep.values must not be empty".into());
        }
        if let Some(v) = self.sweep.values.iter().find(|v| !v.is_finite()) {
            return bad(format!("sweep value {v} is not finite"));
        }
        if !self.sweep.fixed_snr_db.is_finite() {
            return bad("sweep.fixed_snr_db must be finite".into());
        }
        if matches!(self.scenario, Scenario::BiasSweep | Scenario::SinrVsC2max)
            && self.sweep.values.iter().any(|&v| v < 0.0)
        {
            return bad("sweep values must be non-negative for this scenario".into());
        }
        if self.frame.n < 2 {
            return bad(format!("frame.n must be at least 2, got {}", self.frame.n));
        }
        if !(self.codebook.c2max >= 0.0) || !self.codebook.c2max.is_finite() {
            return bad(format!("codebook.c2max must be non-negative, got {}", self.codebook.c2max));
        }
        if self.codebook.m < 2 || !self.codebook.m.is_power_of_two() {
            return bad(format!("codebook.m must be a power of two ≥ 2, got {}", self.codebook.m));
        }
        if self.channel.paths == 0 {
            return bad("channel.paths must be at least 1".into());
        }
        if !(self.channel.alpha_max >= 0.0) || !self.channel.alpha_max.is_finite() {
            return bad(format!("channel.alpha_max must be non-negative, got {}", self.channel.alpha_max));
        }
        if !(self.csi_error_var >= 0.0) || !self.csi_error_var.is_finite() {
            return bad(format!("csi_error_var must be non-negative, got {}", self.csi_error_var));
        }
        if !self.afdm_c2.is_finite() {
            return bad("afdm_c2 must be finite".into());
        }
        if let EveStrategy::Biased { sigma } = self.eve {
            if !(sigma >= 0.0) {
                return bad(format!("eve.sigma must be non-negative, got {sigma}"));
            }
        }
        if let Some(ncp) = self.frame.ncp {
            if ncp < self.max_delay() {
                return bad(format!(
                    "frame.ncp = {ncp} is shorter than the largest path delay {}",
                    self.max_delay()
                ));
            }
            if ncp > self.frame.n {
                return bad(format!("frame.ncp = {ncp} exceeds frame.n"));
            }
        }
        if self.max_delay() > self.frame.n {
            return bad("channel delays exceed the frame length".into());
        }
        Polynomial::from_exponents(&self.keystream.polynomial)
            .map_err(|e| Error::Config(format!("keystream.polynomial: {e}")))?;
        if self.keystream.seed == 0 {
            return bad("keystream.seed must be nonzero".into());
        }
        Ok(())
    }

    pub fn max_delay(&self) -> usize {
        match self.channel.model {
            ChannelModel::Jakes => self.channel.paths - 1,
            ChannelModel::Identity => 0,
        }
    }

    pub fn frame_params(&self) -> Result<FrameParams> {
        let n = self.frame.n;
        let ncp = self.frame.ncp.unwrap_or(self.max_delay());
        let c1 = self
            .frame
            .c1
            .unwrap_or_else(|| default_c1(n, self.channel.alpha_max));
        FrameParams::new(n, ncp, c1, self.frame.modulation)
    }

    pub fn codebook(&self) -> Result<Codebook> {
        build_codebook(self.codebook.c2max, self.codebook.m)
    }

    pub fn polynomial(&self) -> Result<Polynomial> {
        Polynomial::from_exponents(&self.keystream.polynomial)
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = [
    "sinr-curve",
    "bob-vs-afdm",
    "eve-ber",
    "csi-error",
    "bias-sweep",
    "search-space",
];

/// Ready-made configurations for the standard experiments.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::default();
    let cfg = match name {
        "sinr-curve" => ExperimentConfig {
            scenario: Scenario::SinrVsC2max,
            frame: FrameConfig { n: 1024, ..FrameConfig::default() },
            sweep: SweepConfig {
                values: vec![0.0, 1e-7, 2e-7, 5e-7, 1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 5e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 5.0],
                fixed_snr_db: 25.0,
            },
            ..base
        },
        "bob-vs-afdm" => ExperimentConfig {
            scenario: Scenario::BobVsAfdmBer,
            ..base
        },
        "eve-ber" => ExperimentConfig {
            scenario: Scenario::EveBer,
            trials: 20,
            frame: FrameConfig { n: 1024, ..FrameConfig::default() },
            ..base
        },
        "csi-error" => ExperimentConfig {
            scenario: Scenario::CsiErrorBer,
            trials: 20,
            // 0.4·σ²/N at 25 dB, which costs Bob less than 2 dB.
            csi_error_var: 1.235e-6,
            frame: FrameConfig { n: 1024, ..FrameConfig::default() },
            codebook: CodebookConfig { c2max: 4.88e-6, m: 4 },
            ..base
        },
        "bias-sweep" => ExperimentConfig {
            scenario: Scenario::BiasSweep,
            trials: 20,
            frame: FrameConfig { n: 1024, ..FrameConfig::default() },
            channel: ChannelConfig { eve_link: EveLink::Shared, ..ChannelConfig::default() },
            eve: EveStrategy::Biased { sigma: 0.0 },
            sweep: SweepConfig {
                values: vec![0.0, 1e-8, 2e-8, 5e-8, 1e-7, 2e-7, 4.2e-7, 1e-6, 2e-6],
                fixed_snr_db: 25.0,
            },
            ..base
        },
        "search-space" => ExperimentConfig {
            scenario: Scenario::SearchSpace,
            sweep: SweepConfig { values: vec![], fixed_snr_db: 25.0 },
            ..base
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}', expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
