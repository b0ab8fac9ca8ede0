//! Link-level simulator for SE-AFDM: AFDM with keystream-driven,
//! per-subcarrier second chirp parameters that hide the symbols from an
//! eavesdropper who lacks the keystream.
//!
//! The chain is Alice → doubly-selective channel → {Bob, Eve}, with MMSE
//! detection at both receivers and closed-form SINR analytics for Eve.

pub mod channel;
pub mod daft;
pub mod detection;
pub mod error;
pub mod harness;
pub mod keystream;
pub mod security;
pub mod waveform;

pub use channel::{ChannelRealization, EffectiveChannel, Link, PathSpec};
pub use daft::{FrameParams, SignalBlock, SymbolFrame};
pub use detection::{DetectionResult, LinkBudget};
pub use error::{Error, Result};
pub use keystream::{C2Schedule, Codebook, KeystreamState, Owner, Polynomial};
pub use security::SinrCurve;
pub use waveform::{ConstellationSpec, Modulation};
