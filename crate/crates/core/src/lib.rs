//! Link-level simulation of self-interference (SI) channel estimation in
//! in-band full-duplex MIMO transceivers.
//!
//! The crate is organized bottom-up:
//!
//! - [`waveform`]: OFDM transmit frames and the received signal of interest.
//! - [`rf_chain`]: IQ imbalance, polynomial nonlinearities, thermal noise,
//!   ADC quantization and the composed transmit/receive chains.
//! - [`channel`]: SI coupling channels, propagation and fixed RF cancellation.
//! - [`cancellation`]: reference convolution matrices, least-squares channel
//!   estimation (linear and widely-linear), digital cancellation and SINR.
//! - [`analysis`]: Cramér–Rao bounds, the calibration sample-size relation and
//!   achievable-rate expressions.
//! - [`harness`]: configuration, seeded Monte-Carlo experiments and CSV output.
//!
//! Power levels follow one convention throughout: a mean-square sample
//! amplitude of 1.0 corresponds to 0 dBm.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cancellation;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rf_chain;
pub mod rng;
pub mod signal;
pub mod waveform;

pub use analysis::{NoiseProfile, RateScenario};
pub use cancellation::{ChannelEstimate, EstimationMode, ReferenceMatrix};
pub use channel::{FirResponse, MimoChannel};
pub use error::{Error, Result};
pub use harness::config::TransceiverConfig;
pub use harness::record::ExperimentRecord;
pub use linalg::CMatrix;
pub use signal::ComplexBaseband;
pub use waveform::OfdmParams;

pub use num_complex::Complex64;
