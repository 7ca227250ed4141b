//! Self-interference coupling channels between TX and RX antennas and the
//! fixed-suppression RF canceller.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{db_to_amplitude, ComplexBaseband};

/// Complex FIR taps of one TX -> RX link.
#[derive(Debug, Clone, PartialEq)]
pub struct FirResponse {
    pub taps: Vec<Complex64>,
}

impl FirResponse {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::usage("FIR response needs at least one tap"));
        }
        Ok(Self { taps })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// `n_rx x n_tx` grid of equal-length FIR responses.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    n_tx: usize,
    n_rx: usize,
    /// Row-major by receiver: `responses[i * n_tx + j]` is TX j -> RX i.
    responses: Vec<FirResponse>,
}

impl MimoChannel {
    pub fn new(n_rx: usize, n_tx: usize, responses: Vec<FirResponse>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 {
            return Err(Error::usage("channel needs at least one TX and one RX"));
        }
        if responses.len() != n_rx * n_tx {
            return Err(Error::usage(format!(
                "expected {} responses for a {n_rx}x{n_tx} channel, got {}",
                n_rx * n_tx,
                responses.len()
            )));
        }
        let m = responses[0].len();
        if responses.iter().any(|r| r.len() != m) {
            return Err(Error::usage("all channel responses must share one length"));
        }
        Ok(Self {
            n_tx,
            n_rx,
            responses,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// Taps per response.
    pub fn len_m(&self) -> usize {
        self.responses[0].len()
    }

    /// Response from TX `tx` to RX `rx`.
    pub fn response(&self, rx: usize, tx: usize) -> &FirResponse {
        &self.responses[rx * self.n_tx + tx]
    }

    /// Total tap energy seen by RX `rx`, summed over transmitters.
    pub fn rx_energy(&self, rx: usize) -> f64 {
        (0..self.n_tx).map(|j| self.response(rx, j).energy()).sum()
    }
}

/// Statistical SI channel profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelProfile {
    /// Taps per link at the simulation sample rate.
    pub channel_len_m: usize,
    /// Share of link energy carried by the deterministic first tap.
    pub dominant_tap_fraction: f64,
    /// Power decay of the diffuse taps, per tap.
    pub tap_decay_db: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self {
            channel_len_m: 16,
            dominant_tap_fraction: 0.9,
            tap_decay_db: 2.0,
        }
    }
}

impl ChannelProfile {
    pub fn validate(&self) -> Result<()> {
        if self.channel_len_m == 0 {
            return Err(Error::config("channel_len_m must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.dominant_tap_fraction) {
            return Err(Error::config("dominant_tap_fraction must be within [0, 1]"));
        }
        if !self.tap_decay_db.is_finite() {
            return Err(Error::config("tap_decay_db must be finite"));
        }
        Ok(())
    }

    /// Expected power of each tap for a link of unit energy.
    pub fn tap_power_profile(&self) -> Vec<f64> {
        let m = self.channel_len_m;
        if m == 1 {
            return vec![1.0];
        }
        let weights: Vec<f64> = (1..m)
            .map(|k| 10f64.powf(-self.tap_decay_db * (k - 1) as f64 / 10.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let diffuse = 1.0 - self.dominant_tap_fraction;
        std::iter::once(self.dominant_tap_fraction)
            .chain(weights.iter().map(|w| diffuse * w / total))
            .collect()
    }
}

/// Draws an SI channel whose expected per-RX energy is
/// `-antenna_separation_db`, split evenly across transmitters.
///
/// Tap 0 has deterministic magnitude and uniform phase; the remaining taps
/// are circular Gaussian with exponentially decaying power.
pub fn draw_si_channel<R: Rng + ?Sized>(
    profile: &ChannelProfile,
    antenna_separation_db: f64,
    n_rx: usize,
    n_tx: usize,
    rng: &mut R,
) -> Result<MimoChannel> {
    profile.validate()?;
    let link_energy = db_to_amplitude(-antenna_separation_db).powi(2) / n_tx as f64;
    let powers = profile.tap_power_profile();
    let mut responses = Vec::with_capacity(n_rx * n_tx);
    for _ in 0..n_rx * n_tx {
        let mut taps = Vec::with_capacity(powers.len());
        let phase: f64 = rng.random::<f64>() * 2.0 * PI;
        taps.push(Complex64::from_polar(
            (powers[0] * link_energy).sqrt(),
            phase,
        ));
        for &p in &powers[1..] {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            taps.push(Complex64::new(re, im) * (p * link_energy / 2.0).sqrt());
        }
        responses.push(FirResponse::new(taps)?);
    }
    MimoChannel::new(n_rx, n_tx, responses)
}

/// Causal convolution truncated to the input length (zero initial state).
pub fn convolve(taps: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (k, &h) in taps.iter().enumerate() {
        if h == Complex64::new(0.0, 0.0) || k >= x.len() {
            continue;
        }
        for (o, &xv) in out[k..].iter_mut().zip(x) {
            *o += h * xv;
        }
    }
    out
}

fn check_tx_signals(channels: &MimoChannel, tx: &[ComplexBaseband]) -> Result<()> {
    if tx.len() != channels.n_tx() {
        return Err(Error::usage(format!(
            "channel has {} transmitters but {} signals were given",
            channels.n_tx(),
            tx.len()
        )));
    }
    let (len, rate) = (tx[0].len(), tx[0].sample_rate_hz());
    if tx
        .iter()
        .any(|s| s.len() != len || s.sample_rate_hz() != rate)
    {
        return Err(Error::usage(
            "transmit signals must share length and sample rate",
        ));
    }
    Ok(())
}

fn superpose(channels: &MimoChannel, rx: usize, tx: &[ComplexBaseband]) -> ComplexBaseband {
    let mut acc = vec![Complex64::new(0.0, 0.0); tx[0].len()];
    for (j, x) in tx.iter().enumerate() {
        for (a, v) in acc
            .iter_mut()
            .zip(convolve(&channels.response(rx, j).taps, x.samples()))
        {
            *a += v;
        }
    }
    tx[0].with_samples(acc)
}

/// Output `i` is `sum_j h_ij * x_j`, same length as the inputs.
pub fn propagate(
    channels: &MimoChannel,
    tx_signals: &[ComplexBaseband],
) -> Result<Vec<ComplexBaseband>> {
    check_tx_signals(channels, tx_signals)?;
    Ok((0..channels.n_rx())
        .map(|i| superpose(channels, i, tx_signals))
        .collect())
}

#[derive(Debug, Clone)]
pub struct RfCancelOutput {
    pub signal: ComplexBaseband,
    /// Realized SI power reduction in dB.
    pub achieved_db: f64,
}

/// Subtracts a scaled replica of the SI at receiver `rx`, built from the
/// true channel and the transmitted RF signals, so the SI component drops by
/// `suppression_db`. Anything else in `rx_input` passes unchanged.
pub fn rf_cancel(
    rx_input: &ComplexBaseband,
    rx: usize,
    tx_rf: &[ComplexBaseband],
    channels: &MimoChannel,
    suppression_db: f64,
) -> Result<RfCancelOutput> {
    if !(suppression_db >= 0.0) {
        return Err(Error::usage(format!(
            "RF suppression must be non-negative, got {suppression_db} dB"
        )));
    }
    if rx >= channels.n_rx() {
        return Err(Error::usage(format!("receiver index {rx} out of range")));
    }
    check_tx_signals(channels, tx_rf)?;
    if tx_rf[0].len() != rx_input.len() {
        return Err(Error::usage(
            "RF input and transmit signals differ in length",
        ));
    }
    if suppression_db == 0.0 {
        return Ok(RfCancelOutput {
            signal: rx_input.clone(),
            achieved_db: 0.0,
        });
    }
    let si = superpose(channels, rx, tx_rf);
    let alpha = 1.0 - db_to_amplitude(-suppression_db);
    let replica = si.scaled(alpha);
    let si_power = si.mean_power();
    let residual_power = si.sub(&replica)?.mean_power();
    let achieved_db = if residual_power > 0.0 {
        10.0 * (si_power / residual_power).log10()
    } else {
        f64::INFINITY
    };
    Ok(RfCancelOutput {
        signal: rx_input.sub(&replica)?,
        achieved_db,
    })
}
