//! The sample container shared by every processing stage.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Converts a level in dBm to linear power under the 1.0 = 0 dBm convention.
pub fn dbm_to_power(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts linear power to dBm. Zero power maps to `-inf`.
pub fn power_to_dbm(power: f64) -> f64 {
    10.0 * power.log10()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Mean of `|s|^2`, or 0 for an empty slice.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// A finite run of complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBaseband {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexBaseband {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::usage(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Linear mean power; see [`crate::waveform::measure_power`] for dBm.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// A new signal sharing this one's sample rate.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.map(|s| s * gain)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_samples(self.samples.iter().map(|&s| f(s)).collect())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::usage(format!(
                "sample rate mismatch: {} Hz vs {} Hz",
                self.sample_rate_hz, other.sample_rate_hz
            )));
        }
        if self.len() != other.len() {
            return Err(Error::usage(format!(
                "length mismatch: {} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Samples `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.len())
            .ok_or_else(|| {
                Error::usage(format!(
                    "window [{start}, {start}+{len}) exceeds signal length {}",
                    self.len()
                ))
            })?;
        Ok(self.with_samples(self.samples[start..end].to_vec()))
    }

    /// Keeps every `factor`-th sample starting at index 0; the sample rate
    /// drops accordingly. No anti-alias filtering is applied.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::usage("decimation factor must be at least 1"));
        }
        Ok(Self {
            samples: self.samples.iter().step_by(factor).copied().collect(),
            sample_rate_hz: self.sample_rate_hz / factor as f64,
        })
    }
}
