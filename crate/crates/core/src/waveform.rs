//! OFDM transmit waveforms and the received signal of interest.
//!
//! Frames are built by placing 16-QAM symbols on `n_subcarriers` bins
//! centred on DC of an `n_subcarriers * oversampling` point IFFT, so the
//! waveform is exactly band-limited to `1 / oversampling` of the sample rate
//! within each symbol. The cyclic prefix is copied from the symbol tail.

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{dbm_to_power, power_to_dbm, ComplexBaseband};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Qam16,
}

impl Constellation {
    /// Unit-average-energy alphabet.
    pub fn alphabet(self) -> Vec<Complex64> {
        match self {
            Constellation::Qam16 => {
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let scale = 1.0 / 10f64.sqrt();
                levels
                    .iter()
                    .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i, q) * scale))
                    .collect()
            }
        }
    }
}

/// OFDM waveform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmParams {
    pub n_subcarriers: usize,
    /// Cyclic prefix length in symbol-rate samples.
    pub cp_len: usize,
    pub constellation: Constellation,
    pub oversampling: usize,
    /// Occupied signal bandwidth; also the thermal-noise bandwidth.
    pub bandwidth_hz: f64,
    /// Simulation sample rate after oversampling.
    pub sample_rate_hz: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            cp_len: 16,
            constellation: Constellation::Qam16,
            oversampling: 4,
            bandwidth_hz: 12.5e6,
            sample_rate_hz: 64e6,
        }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(Error::config("n_subcarriers must be positive"));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::config(format!(
                "cp_len ({}) must be shorter than n_subcarriers ({})",
                self.cp_len, self.n_subcarriers
            )));
        }
        if self.oversampling == 0 {
            return Err(Error::config("oversampling must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth_hz must be positive"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::config("sample_rate_hz must be positive"));
        }
        Ok(())
    }

    pub fn fft_len(&self) -> usize {
        self.n_subcarriers * self.oversampling
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        (self.n_subcarriers + self.cp_len) * self.oversampling
    }

    /// Same waveform without oversampling, at the symbol-rate sample rate.
    pub fn at_symbol_rate(&self) -> Self {
        Self {
            oversampling: 1,
            sample_rate_hz: self.sample_rate_hz / self.oversampling as f64,
            ..self.clone()
        }
    }
}

/// Generates `n_symbols` OFDM symbols of i.i.d. 16-QAM data.
///
/// Each symbol is scaled so its IFFT body has mean power exactly 1; the
/// cyclic prefix repeats part of that body. Output depends only on `params`
/// and the draws taken from `rng`, so a longer call is a prefix-extension of
/// a shorter one with the same starting stream.
pub fn generate_ofdm_frames<R: Rng + ?Sized>(
    params: &OfdmParams,
    n_symbols: usize,
    rng: &mut R,
) -> Result<ComplexBaseband> {
    params.validate()?;
    if n_symbols == 0 {
        return Err(Error::usage("n_symbols must be at least 1"));
    }
    let alphabet = params.constellation.alphabet();
    let nfft = params.fft_len();
    let cp = params.cp_len * params.oversampling;
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(nfft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut bins = vec![Complex64::new(0.0, 0.0); nfft];
    let mut out = Vec::with_capacity(n_symbols * params.symbol_len());
    let half = params.n_subcarriers / 2;

    for _ in 0..n_symbols {
        bins.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        let mut energy = 0.0;
        for k in 0..params.n_subcarriers {
            let sym = alphabet[rng.random_range(0..alphabet.len())];
            energy += sym.norm_sqr();
            // Subcarrier k sits at frequency offset k - n/2.
            let bin = (k + nfft - half) % nfft;
            bins[bin] = sym;
        }
        ifft.process_with_scratch(&mut bins, &mut scratch);
        // Unnormalized IFFT: mean |x|^2 over the body equals sum |X_k|^2.
        let scale = 1.0 / energy.sqrt();
        out.extend(bins[nfft - cp..].iter().map(|v| v * scale));
        out.extend(bins.iter().map(|v| v * scale));
    }
    ComplexBaseband::new(out, params.sample_rate_hz)
}

/// Generates `n_samples` of an independent OFDM stream at `power_dbm`.
///
/// The stream starts at a uniformly drawn point of its first symbol, so its
/// frame timing is unrelated to that of locally generated frames.
/// `power_dbm = -inf` disables the signal and returns zeros without
/// consuming randomness.
pub fn generate_soi<R: Rng + ?Sized>(
    params: &OfdmParams,
    power_dbm: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ComplexBaseband> {
    params.validate()?;
    if n_samples == 0 {
        return Err(Error::usage("n_samples must be at least 1"));
    }
    if power_dbm == f64::NEG_INFINITY {
        return ComplexBaseband::zeros(n_samples, params.sample_rate_hz);
    }
    if power_dbm.is_nan() || power_dbm == f64::INFINITY {
        return Err(Error::usage(format!(
            "invalid signal power {power_dbm} dBm"
        )));
    }
    let offset = rng.random_range(0..params.symbol_len());
    let n_symbols = (offset + n_samples).div_ceil(params.symbol_len());
    let mut frames = generate_ofdm_frames(params, n_symbols, rng)?.into_samples();
    frames.drain(..offset);
    frames.truncate(n_samples);
    let gain = dbm_to_power(power_dbm).sqrt();
    frames.iter_mut().for_each(|s| *s *= gain);
    ComplexBaseband::new(frames, params.sample_rate_hz)
}

/// Mean sample power in dBm (1.0 mean-square amplitude = 0 dBm).
pub fn measure_power(signal: &ComplexBaseband) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::usage("cannot measure the power of an empty signal"));
    }
    Ok(power_to_dbm(signal.mean_power()))
}

/// `|mean(s^2)| / mean(|s|^2)`: 0 for proper (circular) signals, 1 for
/// purely real ones.
pub fn measure_circularity(signal: &ComplexBaseband) -> Result<f64> {
    const MIN_LEN: usize = 1000;
    if signal.len() < MIN_LEN {
        return Err(Error::usage(format!(
            "circularity needs at least {MIN_LEN} samples, got {}",
            signal.len()
        )));
    }
    let s = signal.samples();
    let pseudo: Complex64 = s.iter().map(|v| v * v).sum();
    let power: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if power == 0.0 {
        return Err(Error::usage(
            "circularity of an all-zero signal is undefined",
        ));
    }
    Ok(pseudo.norm() / power)
}
