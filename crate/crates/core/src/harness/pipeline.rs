//! Signal generation through the full transceiver for one trial.
//!
//! A trial fixes one SI channel realization. Blocks simulated within the
//! trial share that channel; each block kind draws its transmit data, noise
//! and signal of interest from its own random streams, so the estimation
//! block with and without the signal of interest sees identical data and
//! noise, and a shorter block is always a prefix of a longer one.

use num_complex::Complex64;

use crate::cancellation::EstimationMode;
use crate::channel::{draw_si_channel, propagate, rf_cancel, MimoChannel};
use crate::error::{Result, StageContext};
use crate::harness::config::{EstimationRate, ReferenceSource, TransceiverConfig};
use crate::rf_chain::{receive_chain_with_gain, transmit_chain, RxChainConfig, TxChainConfig};
use crate::rng::{Substream, TrialKey};
use crate::signal::{db_to_amplitude, ComplexBaseband};
use crate::waveform::{generate_ofdm_frames, generate_soi};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Samples used to train the channel estimate.
    Estimation,
    /// Full-duplex samples on which the trained canceller is evaluated.
    Measurement,
}

impl BlockKind {
    fn data(self, tx: usize) -> Substream {
        match self {
            BlockKind::Estimation => Substream::EstimationData(tx),
            BlockKind::Measurement => Substream::MeasurementData(tx),
        }
    }

    fn noise(self, rx: usize) -> Substream {
        match self {
            BlockKind::Estimation => Substream::EstimationNoise(rx),
            BlockKind::Measurement => Substream::MeasurementNoise(rx),
        }
    }

    fn soi(self, rx: usize) -> Substream {
        match self {
            BlockKind::Estimation => Substream::EstimationSoi(rx),
            BlockKind::Measurement => Substream::MeasurementSoi(rx),
        }
    }
}

/// Output of one simulated block.
#[derive(Debug, Clone)]
pub struct SimulatedBlock {
    /// Reference signal per transmitter.
    pub refs: Vec<ComplexBaseband>,
    /// Digital received signal per receiver.
    pub received: Vec<ComplexBaseband>,
    /// Ground-truth signal-of-interest component of `received`.
    pub soi: Vec<ComplexBaseband>,
    pub vga_gains_db: Vec<f64>,
    pub chain_gains_db: Vec<f64>,
    pub warnings: Vec<String>,
}

/// One channel realization and the chains around it.
#[derive(Debug, Clone)]
pub struct TrialSimulator<'a> {
    cfg: &'a TransceiverConfig,
    key: TrialKey<'a>,
    channel: MimoChannel,
    tx: TxChainConfig,
    rx: RxChainConfig,
    reference: ReferenceSource,
}

impl<'a> TrialSimulator<'a> {
    pub fn new(cfg: &'a TransceiverConfig, key: TrialKey<'a>) -> Result<Self> {
        let mut rng = key.stream(Substream::Channel);
        let channel = draw_si_channel(
            &cfg.channel,
            cfg.system.antenna_separation_db,
            cfg.system.n_rx,
            cfg.system.n_tx,
            &mut rng,
        )
        .stage("draw_si_channel")?;
        Ok(Self {
            cfg,
            key,
            channel,
            tx: cfg.tx_chain(),
            rx: cfg.rx_chain(),
            reference: cfg.reference_source(),
        })
    }

    pub fn channel(&self) -> &MimoChannel {
        &self.channel
    }

    /// Decimation factor and reference lead of the estimation rate.
    fn rate_map(&self) -> (usize, usize) {
        match self.cfg.simulation.estimation_rate {
            EstimationRate::Oversampled => (1, 0),
            EstimationRate::Symbol => (
                self.cfg.ofdm.oversampling,
                self.cfg.channel.channel_len_m / 2,
            ),
        }
    }

    /// Simulates `len` samples at the estimation rate. With `vga_gains_db`
    /// the AGC is bypassed and the given gains are used per receiver.
    ///
    /// At symbol rate the references are advanced by the lead so causal
    /// taps also cover the precursors of the decimated channel.
    pub fn simulate(
        &self,
        kind: BlockKind,
        len: usize,
        with_soi: bool,
        vga_gains_db: Option<&[f64]>,
    ) -> Result<SimulatedBlock> {
        let (factor, lead) = self.rate_map();
        if factor == 1 {
            return self.simulate_raw(kind, len, with_soi, vga_gains_db);
        }
        let raw = self.simulate_raw(kind, (len + lead) * factor, with_soi, vga_gains_db)?;
        let view = |signals: Vec<ComplexBaseband>, skip: usize| -> Result<Vec<ComplexBaseband>> {
            signals
                .iter()
                .map(|s| s.decimate(factor)?.window(skip, len))
                .collect()
        };
        Ok(SimulatedBlock {
            refs: view(raw.refs, lead)?,
            received: view(raw.received, 0)?,
            soi: view(raw.soi, 0)?,
            ..raw
        })
    }

    fn simulate_raw(
        &self,
        kind: BlockKind,
        len: usize,
        with_soi: bool,
        vga_gains_db: Option<&[f64]>,
    ) -> Result<SimulatedBlock> {
        let cfg = self.cfg;
        let ofdm = &cfg.ofdm;
        let n_symbols = len.div_ceil(ofdm.symbol_len());

        let mut digital = Vec::with_capacity(cfg.system.n_tx);
        let mut rf_out = Vec::with_capacity(cfg.system.n_tx);
        let mut tx_ref = Vec::with_capacity(cfg.system.n_tx);
        for j in 0..cfg.system.n_tx {
            let mut rng = self.key.stream(kind.data(j));
            let mut x = generate_ofdm_frames(ofdm, n_symbols, &mut rng)
                .stage("generate_ofdm_frames")?
                .into_samples();
            x.truncate(len);
            let x = ComplexBaseband::new(x, ofdm.sample_rate_hz)?;
            let out = transmit_chain(&x, &self.tx).stage("transmit_chain")?;
            digital.push(x);
            rf_out.push(out.rf_out);
            tx_ref.push(out.tx_ref);
        }

        let si = propagate(&self.channel, &rf_out).stage("propagate")?;
        let mut received = Vec::with_capacity(cfg.system.n_rx);
        let mut soi_digital = Vec::with_capacity(cfg.system.n_rx);
        let mut vga = Vec::with_capacity(cfg.system.n_rx);
        let mut chain = Vec::with_capacity(cfg.system.n_rx);
        let mut warnings = Vec::new();
        for (i, si_i) in si.iter().enumerate() {
            let soi_power = if with_soi {
                cfg.system.soi_power_dbm
            } else {
                f64::NEG_INFINITY
            };
            let mut rng = self.key.stream(kind.soi(i));
            let soi = generate_soi(ofdm, soi_power, len, &mut rng).stage("generate_soi")?;
            let y = si_i.add(&soi)?;
            let y = rf_cancel(&y, i, &rf_out, &self.channel, cfg.system.rf_cancellation_db)
                .stage("rf_cancel")?
                .signal;
            let mut rng = self.key.stream(kind.noise(i));
            let gain = vga_gains_db.map(|g| g[i]);
            let out =
                receive_chain_with_gain(&y, &self.rx, gain, &mut rng).stage("receive_chain")?;
            soi_digital.push(soi.scaled(db_to_amplitude(out.chain_gain_db)));
            received.push(out.signal);
            vga.push(out.vga_gain_db);
            chain.push(out.chain_gain_db);
            warnings.extend(out.warnings.into_iter().map(|w| format!("rx {i}: {w}")));
        }

        let refs = match self.reference {
            ReferenceSource::Digital => digital,
            ReferenceSource::TxOutput | ReferenceSource::Auto => tx_ref,
        };
        Ok(SimulatedBlock {
            refs,
            received,
            soi: soi_digital,
            vga_gains_db: vga,
            chain_gains_db: chain,
            warnings,
        })
    }

    /// Small-signal channel from the reference signals to the digital output
    /// of receiver `rx`, laid out like the reference-matrix columns.
    ///
    /// Amplifier compression and receiver IQ imaging are neglected, so this
    /// is the target the estimator converges to up to those effects. At
    /// symbol rate the decimated channel has sinc tails beyond the estimated
    /// window; they are dropped here.
    pub fn effective_channel(
        &self,
        rx: usize,
        chain_gain_db: f64,
        mode: EstimationMode,
    ) -> Vec<Complex64> {
        let cfg = self.cfg;
        // Both references reach the antenna with amplitude 10^(P_tx/20):
        // the digital one through drive and PA gain, the rescaled PA output
        // by construction.
        let scale = db_to_amplitude(
            chain_gain_db - cfg.system.rf_cancellation_db + cfg.system.tx_power_dbm,
        );
        let image = match (self.reference, self.tx.iq_imbalance) {
            (ReferenceSource::Digital, true) => self.tx.iq.coefficients().1,
            _ => Complex64::new(0.0, 0.0),
        };
        let (factor, lead) = self.rate_map();
        let m = self.channel.len_m();
        let mut out = Vec::with_capacity(mode.columns(m, cfg.system.n_tx));
        for j in 0..cfg.system.n_tx {
            let h = &self.channel.response(rx, j).taps;
            // Band-limited resampling of the taps onto the estimation grid,
            // truncated to the estimated window.
            let g: Vec<Complex64> = if factor == 1 {
                h.clone()
            } else {
                (0..m)
                    .map(|q| {
                        h.iter()
                            .enumerate()
                            .map(|(k, t)| {
                                t * sinc(q as f64 - lead as f64 - k as f64 / factor as f64)
                            })
                            .sum()
                    })
                    .collect()
            };
            out.extend(g.iter().map(|t| t * scale));
            if mode == EstimationMode::WidelyLinear {
                out.extend(g.iter().map(|t| t * scale * image));
            }
        }
        out
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
