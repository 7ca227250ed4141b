//! Transmitter and receiver analog impairments.
//!
//! All stages are memoryless complex-baseband models:
//!
//! - IQ imbalance: `y = g1 x + g2 conj(x)` with `g1 = 1` and
//!   `|g2|^2 = 10^(-IRR/10)`.
//! - Amplifier/mixer nonlinearity: `y = G (x + a2 |x|^2 + a3 x |x|^2)`, with
//!   `a3 = -1 / P_IIP3` and `a2 = 1 / sqrt(P_IIP2)` so that the two-tone
//!   intercept points land on the configured values (powers per tone, in the
//!   1.0 = 0 dBm convention).
//! - Thermal noise: circular Gaussian at `-174 dBm/Hz + 10 log10(B) + NF`.
//! - ADC: mid-rise uniform quantizer on I and Q with clipping.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{db_to_amplitude, dbm_to_power, power_to_dbm, ComplexBaseband};

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Gain and intercept points of one amplifier or mixer stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfStageParams {
    pub gain_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iip2_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iip3_dbm: Option<f64>,
    pub nf_db: f64,
}

impl RfStageParams {
    pub fn validate(&self, name: &str) -> Result<()> {
        if !self.gain_db.is_finite() {
            return Err(Error::config(format!("{name}: gain_db must be finite")));
        }
        for (key, v) in [("iip2_dbm", self.iip2_dbm), ("iip3_dbm", self.iip3_dbm)] {
            if let Some(v) = v {
                if v.is_nan() || v == f64::NEG_INFINITY {
                    return Err(Error::config(format!("{name}: {key} must be > -inf")));
                }
            }
        }
        if !(self.nf_db >= 0.0) {
            return Err(Error::config(format!("{name}: nf_db must be non-negative")));
        }
        Ok(())
    }

    /// Coefficient of `|x|^2`; zero when IIP2 is absent or infinite.
    pub fn a2(&self) -> f64 {
        match self.iip2_dbm {
            Some(p) if p.is_finite() => 1.0 / dbm_to_power(p).sqrt(),
            _ => 0.0,
        }
    }

    /// Coefficient of `x |x|^2` (compressive); zero when IIP3 is absent or
    /// infinite.
    pub fn a3(&self) -> f64 {
        match self.iip3_dbm {
            Some(p) if p.is_finite() => -1.0 / dbm_to_power(p),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqImbalanceParams {
    /// Image rejection ratio; `inf` disables the imbalance.
    pub irr_db: f64,
}

impl IqImbalanceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.irr_db > 0.0) {
            return Err(Error::config(format!(
                "irr_db must be positive, got {}",
                self.irr_db
            )));
        }
        Ok(())
    }

    /// Direct and image coefficients `(g1, g2)`.
    ///
    /// `g1` is fixed to 1. The image phase of 135 degrees corresponds to
    /// equal gain and phase mismatch contributions; only `|g2|` is
    /// observable through the IRR.
    pub fn coefficients(&self) -> (Complex64, Complex64) {
        let g2 = if self.irr_db.is_infinite() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(db_to_amplitude(-self.irr_db), 0.75 * PI)
        };
        (Complex64::new(1.0, 0.0), g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcParams {
    pub bits: u32,
    /// Full scale above the signal RMS.
    pub papr_headroom_db: f64,
}

impl Default for AdcParams {
    fn default() -> Self {
        Self {
            bits: 12,
            papr_headroom_db: 10.0,
        }
    }
}

impl AdcParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=24).contains(&self.bits) {
            return Err(Error::config(format!(
                "ADC bits must be in 1..=24, got {}",
                self.bits
            )));
        }
        if !self.papr_headroom_db.is_finite() {
            return Err(Error::config("papr_headroom_db must be finite"));
        }
        Ok(())
    }
}

pub fn apply_iq_imbalance(signal: &ComplexBaseband, p: &IqImbalanceParams) -> ComplexBaseband {
    let (g1, g2) = p.coefficients();
    signal.map(|x| g1 * x + g2 * x.conj())
}

pub fn apply_nonlinear_stage(signal: &ComplexBaseband, p: &RfStageParams) -> ComplexBaseband {
    let g = db_to_amplitude(p.gain_db);
    let (a2, a3) = (p.a2(), p.a3());
    if a2 == 0.0 && a3 == 0.0 {
        return signal.scaled(g);
    }
    signal.map(|x| {
        let e = x.norm_sqr();
        g * (x + a2 * e + a3 * e * x)
    })
}

/// Noise power in dBm added by [`add_thermal_noise`].
pub fn thermal_noise_dbm(nf_db: f64, bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + nf_db
}

pub fn add_thermal_noise<R: Rng + ?Sized>(
    signal: &ComplexBaseband,
    nf_db: f64,
    bandwidth_hz: f64,
    rng: &mut R,
) -> Result<ComplexBaseband> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::usage(format!(
            "noise bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let sigma = (dbm_to_power(thermal_noise_dbm(nf_db, bandwidth_hz)) / 2.0).sqrt();
    Ok(signal.with_samples(
        signal
            .samples()
            .iter()
            .map(|&x| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x + Complex64::new(re, im) * sigma
            })
            .collect(),
    ))
}

/// Taps of a unit-energy lowpass FIR passing `|f| < occupancy / 2` cycles
/// per sample (Blackman-windowed sinc).
pub fn band_filter_taps(occupancy: f64, len: usize) -> Vec<f64> {
    let center = (len - 1) as f64 / 2.0;
    let fc = occupancy / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|k| {
            let t = k as f64 - center;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            let w = 2.0 * PI * k as f64 / (len - 1) as f64;
            sinc * (0.42 - 0.5 * w.cos() + 0.08 * (2.0 * w).cos())
        })
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    taps.iter_mut().for_each(|t| *t /= energy.sqrt());
    taps
}

/// Length of the noise-shaping filter of [`add_band_limited_noise`].
pub const NOISE_FILTER_LEN: usize = 257;

/// As [`add_thermal_noise`], with the noise confined to the central
/// `occupancy` fraction of the sample rate by a receive channel filter. The
/// total noise power is unchanged. Sample `n` of the noise depends only on
/// the first `n + NOISE_FILTER_LEN` draws, so a shorter block is a prefix of
/// a longer one.
pub fn add_band_limited_noise<R: Rng + ?Sized>(
    signal: &ComplexBaseband,
    nf_db: f64,
    bandwidth_hz: f64,
    occupancy: f64,
    rng: &mut R,
) -> Result<ComplexBaseband> {
    if !(occupancy > 0.0 && occupancy <= 1.0) {
        return Err(Error::usage(format!(
            "noise occupancy must lie in (0, 1], got {occupancy}"
        )));
    }
    if occupancy == 1.0 {
        return add_thermal_noise(signal, nf_db, bandwidth_hz, rng);
    }
    let len = signal.len() + NOISE_FILTER_LEN - 1;
    let white = add_thermal_noise(
        &ComplexBaseband::zeros(len, signal.sample_rate_hz())?,
        nf_db,
        bandwidth_hz,
        rng,
    )?;
    let white = white.samples();
    let taps = band_filter_taps(occupancy, NOISE_FILTER_LEN);
    Ok(signal.with_samples(
        signal
            .samples()
            .iter()
            .enumerate()
            .map(|(n, &x)| {
                let w = &white[n..n + NOISE_FILTER_LEN];
                x + w
                    .iter()
                    .zip(taps.iter().rev())
                    .map(|(v, t)| v * t)
                    .sum::<Complex64>()
            })
            .collect(),
    ))
}

/// Quantizes with full scale tied to the input RMS:
/// `full_scale = rms * 10^(headroom/20)` on each of I and Q.
pub fn quantize_adc(signal: &ComplexBaseband, p: &AdcParams) -> Result<ComplexBaseband> {
    p.validate()?;
    if signal.is_empty() {
        return Err(Error::usage("cannot quantize an empty signal"));
    }
    let rms = signal.mean_power().sqrt();
    if rms == 0.0 {
        return Ok(signal.clone());
    }
    Ok(quantize_with_full_scale(
        signal,
        p.bits,
        rms * db_to_amplitude(p.papr_headroom_db),
    ))
}

/// Mid-rise quantizer with `2^bits` levels spanning `[-full_scale, full_scale]`
/// on each rail; values beyond the range clip to the outermost level.
pub fn quantize_with_full_scale(
    signal: &ComplexBaseband,
    bits: u32,
    full_scale: f64,
) -> ComplexBaseband {
    let levels = (1u64 << bits) as f64;
    let step = 2.0 * full_scale / levels;
    let max_index = levels / 2.0 - 1.0;
    let q = |v: f64| {
        let idx = (v / step).floor().clamp(-max_index - 1.0, max_index);
        (idx + 0.5) * step
    };
    signal.map(|x| Complex64::new(q(x.re), q(x.im)))
}

/// Transmit-side parameters and switches.
#[derive(Debug, Clone, PartialEq)]
pub struct TxChainConfig {
    pub iq: IqImbalanceParams,
    pub pa: RfStageParams,
    pub tx_power_dbm: f64,
    pub iq_imbalance: bool,
    pub nonlinearity: bool,
}

#[derive(Debug, Clone)]
pub struct TxOutput {
    /// PA output at antenna level.
    pub rf_out: ComplexBaseband,
    /// PA output rescaled to nominal unit power: the transmitter-output
    /// reference tap.
    pub tx_ref: ComplexBaseband,
}

/// `PA(IQ(x))`, driving a unit-power input so the PA output sits at
/// `tx_power_dbm`.
pub fn transmit_chain(x: &ComplexBaseband, cfg: &TxChainConfig) -> Result<TxOutput> {
    cfg.pa.validate("pa")?;
    let drive = db_to_amplitude(cfg.tx_power_dbm - cfg.pa.gain_db);
    let mut s = x.scaled(drive);
    if cfg.iq_imbalance {
        cfg.iq.validate()?;
        s = apply_iq_imbalance(&s, &cfg.iq);
    }
    let rf_out = if cfg.nonlinearity {
        apply_nonlinear_stage(&s, &cfg.pa)
    } else {
        s.scaled(db_to_amplitude(cfg.pa.gain_db))
    };
    let tx_ref = rf_out.scaled(db_to_amplitude(-cfg.tx_power_dbm));
    Ok(TxOutput { rf_out, tx_ref })
}

/// Receive-side parameters and switches.
#[derive(Debug, Clone, PartialEq)]
pub struct RxChainConfig {
    pub lna: RfStageParams,
    pub mixer: RfStageParams,
    /// VGA intercepts; its gain is set by the AGC.
    pub vga: RfStageParams,
    pub vga_gain_min_db: f64,
    pub vga_gain_max_db: f64,
    pub iq: IqImbalanceParams,
    pub adc: AdcParams,
    pub noise_figure_db: f64,
    pub noise_bandwidth_hz: f64,
    /// Fraction of the sample rate, centred on DC, occupied by the thermal
    /// noise; 1 gives white noise.
    pub noise_occupancy: f64,
    /// Per-rail ADC full-scale amplitude.
    pub adc_full_scale: f64,
    pub thermal_noise: bool,
    pub iq_imbalance: bool,
    pub nonlinearity: bool,
    pub quantization: bool,
}

impl RxChainConfig {
    /// RMS at the ADC input that leaves `papr_headroom_db` to full scale.
    pub fn agc_target_rms(&self) -> f64 {
        self.adc_full_scale * db_to_amplitude(-self.adc.papr_headroom_db)
    }
}

#[derive(Debug, Clone)]
pub struct RxOutput {
    /// Digital samples `y_ADC`.
    pub signal: ComplexBaseband,
    pub vga_gain_db: f64,
    /// Small-signal gain from antenna to ADC output.
    pub chain_gain_db: f64,
    pub warnings: Vec<String>,
}

/// `ADC(VGA(Mixer_IQ(LNA(y + noise))))` with the VGA gain chosen by AGC so
/// the ADC input RMS hits the headroom target.
pub fn receive_chain<R: Rng + ?Sized>(
    y_rf: &ComplexBaseband,
    cfg: &RxChainConfig,
    rng: &mut R,
) -> Result<RxOutput> {
    receive_chain_with_gain(y_rf, cfg, None, rng)
}

/// As [`receive_chain`], optionally with the VGA gain frozen at a previous
/// AGC setting.
pub fn receive_chain_with_gain<R: Rng + ?Sized>(
    y_rf: &ComplexBaseband,
    cfg: &RxChainConfig,
    vga_gain_db: Option<f64>,
    rng: &mut R,
) -> Result<RxOutput> {
    if y_rf.is_empty() {
        return Err(Error::usage("receive chain input is empty"));
    }
    cfg.adc.validate()?;
    let mut warnings = Vec::new();
    let mut s = if cfg.thermal_noise {
        add_band_limited_noise(
            y_rf,
            cfg.noise_figure_db,
            cfg.noise_bandwidth_hz,
            cfg.noise_occupancy,
            rng,
        )?
    } else {
        y_rf.clone()
    };
    let stage = |s: &ComplexBaseband, p: &RfStageParams| {
        if cfg.nonlinearity {
            apply_nonlinear_stage(s, p)
        } else {
            s.scaled(db_to_amplitude(p.gain_db))
        }
    };
    s = stage(&s, &cfg.lna);
    s = stage(&s, &cfg.mixer);
    if cfg.iq_imbalance {
        s = apply_iq_imbalance(&s, &cfg.iq);
    }

    let gain_db = match vga_gain_db {
        Some(g) => g,
        None => {
            let rms = s.mean_power().sqrt();
            let wanted = if rms > 0.0 {
                20.0 * (cfg.agc_target_rms() / rms).log10()
            } else {
                cfg.vga_gain_max_db
            };
            let clamped = wanted.clamp(cfg.vga_gain_min_db, cfg.vga_gain_max_db);
            if clamped != wanted {
                warnings.push(format!(
                    "required VGA gain {wanted:.2} dB outside [{}, {}] dB; clamped to {clamped:.2} dB",
                    cfg.vga_gain_min_db, cfg.vga_gain_max_db
                ));
            }
            clamped
        }
    };
    let vga = RfStageParams {
        gain_db,
        ..cfg.vga.clone()
    };
    s = stage(&s, &vga);
    if cfg.quantization {
        s = quantize_with_full_scale(&s, cfg.adc.bits, cfg.adc_full_scale);
    }
    Ok(RxOutput {
        signal: s,
        vga_gain_db: gain_db,
        chain_gain_db: cfg.lna.gain_db + cfg.mixer.gain_db + gain_db,
        warnings,
    })
}

/// Noise floor referred to the antenna, in dBm.
pub fn input_referred_noise_dbm(cfg: &RxChainConfig) -> f64 {
    thermal_noise_dbm(cfg.noise_figure_db, cfg.noise_bandwidth_hz)
}

/// Output power in dBm of a digital signal referred back to the antenna.
pub fn input_referred_dbm(out: &RxOutput) -> f64 {
    power_to_dbm(out.signal.mean_power()) - out.chain_gain_db
}
