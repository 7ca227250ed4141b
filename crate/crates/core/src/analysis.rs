//! Closed-form estimation bounds and achievable rates.

use crate::cancellation::ReferenceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{gram_inverse_from_r, CMatrix, StreamingQr};

/// Noise seen by the SI channel estimator, in linear digital-domain power.
///
/// `sigma_r2 = 0` describes a calibration period (no signal of interest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseProfile {
    pub sigma_n2: f64,
    pub sigma_r2: f64,
}

impl NoiseProfile {
    pub fn new(sigma_n2: f64, sigma_r2: f64) -> Result<Self> {
        if !(sigma_n2 > 0.0 && sigma_n2.is_finite()) {
            return Err(Error::usage(format!(
                "sigma_n2 must be positive, got {sigma_n2}"
            )));
        }
        if !(sigma_r2 >= 0.0 && sigma_r2.is_finite()) {
            return Err(Error::usage(format!(
                "sigma_r2 must be non-negative, got {sigma_r2}"
            )));
        }
        Ok(Self { sigma_n2, sigma_r2 })
    }

    pub fn calibration(sigma_n2: f64) -> Result<Self> {
        Self::new(sigma_n2, 0.0)
    }

    /// Effective noise power `sigma_n2 + sigma_r2`.
    pub fn total(&self) -> f64 {
        self.sigma_n2 + self.sigma_r2
    }
}

/// Inputs of the rate expression with a calibration period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateScenario {
    pub n_c: usize,
    /// Coherence time in seconds.
    pub t_coh: f64,
    /// Sampling frequency in Hz.
    pub f_s: f64,
    /// Half-duplex thermal SNR, linear.
    pub snr: f64,
    /// SINR after calibration-trained cancellation, linear.
    pub sinr_c: f64,
    /// SINR after cancellation trained without calibration, linear.
    pub sinr_nc: f64,
}

impl RateScenario {
    /// Fraction of the coherence interval spent in half-duplex calibration;
    /// both ends calibrate in turn, hence `2 N_c`.
    pub fn overhead_fraction(&self) -> f64 {
        2.0 * self.n_c as f64 / (self.t_coh * self.f_s)
    }
}

/// `(X^H X)^{-1} (sigma_n2 + sigma_r2)`.
pub fn crlb_exact(x: &ReferenceMatrix, noise: NoiseProfile) -> Result<CMatrix> {
    let qr: StreamingQr = x.factor(&[])?;
    let mut inv = gram_inverse_from_r(qr.r())?;
    inv.scale(noise.total());
    Ok(inv)
}

/// Per-tap bound under a white reference, `(sigma_n2 + sigma_r2) / (n p_ref)`.
pub fn crlb_per_tap(n: usize, p_ref: f64, noise: NoiseProfile) -> f64 {
    noise.total() / (n as f64 * p_ref)
}

/// Factor `N / N_c` by which estimation without calibration needs more
/// samples to match the calibrated variance.
pub fn required_sample_ratio(snr_linear: f64) -> f64 {
    snr_linear + 1.0
}

/// Full-duplex rate without calibration, in bits/s/Hz.
pub fn rate_no_calibration(sinr_nc: f64) -> f64 {
    2.0 * (1.0 + sinr_nc).log2()
}

/// Rate with one calibration period per coherence interval, in bits/s/Hz.
pub fn rate_with_calibration(s: &RateScenario) -> Result<f64> {
    let f = s.overhead_fraction();
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Infeasible(format!(
            "calibration of 2 x {} samples does not fit a coherence interval of {} s at {} Hz (overhead {f:.3})",
            s.n_c, s.t_coh, s.f_s
        )));
    }
    Ok(f * (1.0 + s.snr).log2() + 2.0 * (1.0 - f) * (1.0 + s.sinr_c).log2())
}

/// Coherence time at which calibration and no-calibration rates coincide.
///
/// `None` when the calibrated full-duplex rate does not exceed the
/// no-calibration rate, so no crossover exists.
pub fn break_even_coherence_time(
    n_c: usize,
    f_s: f64,
    snr: f64,
    sinr_c: f64,
    sinr_nc: f64,
) -> Option<f64> {
    let full_c = 2.0 * (1.0 + sinr_c).log2();
    let full_nc = rate_no_calibration(sinr_nc);
    let half = (1.0 + snr).log2();
    if full_c <= full_nc || full_c <= half {
        return None;
    }
    // C_c(f) = f*half + (1-f)*full_c is affine in f; solve C_c = full_nc.
    let f = (full_c - full_nc) / (full_c - half);
    if !(f > 0.0 && f <= 1.0) {
        return None;
    }
    Some(2.0 * n_c as f64 / (f * f_s))
}
