//! Transceiver configuration, loaded from TOML.
//!
//! Sections mirror the system and component parameter tables. Every section
//! is optional; a section that is present must name all of its required
//! keys, and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cancellation::EstimationMode;
use crate::channel::ChannelProfile;
use crate::error::{Error, Result};
use crate::rf_chain::{
    thermal_noise_dbm, AdcParams, IqImbalanceParams, RfStageParams, RxChainConfig, TxChainConfig,
};
use crate::waveform::OfdmParams;

/// Per-rail ADC full scale in simulator amplitude units.
pub const ADC_FULL_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub tx_power_dbm: f64,
    pub antenna_separation_db: f64,
    pub rf_cancellation_db: f64,
    pub soi_power_dbm: f64,
    pub rx_noise_figure_db: f64,
    /// Informational: SNR target behind the sensitivity figure.
    pub snr_target_db: f64,
    /// Informational: receiver sensitivity.
    pub sensitivity_dbm: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_tx: 2,
            n_rx: 2,
            tx_power_dbm: 10.0,
            antenna_separation_db: 40.0,
            rf_cancellation_db: 30.0,
            soi_power_dbm: -84.9,
            rx_noise_figure_db: 4.1,
            snr_target_db: 10.0,
            sensitivity_dbm: -88.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IqParams {
    pub tx_irr_db: f64,
    pub rx_irr_db: f64,
}

impl Default for IqParams {
    fn default() -> Self {
        Self {
            tx_irr_db: 25.0,
            rx_irr_db: 60.0,
        }
    }
}

/// VGA intercepts and its AGC gain range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VgaParams {
    pub gain_min_db: f64,
    pub gain_max_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iip2_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iip3_dbm: Option<f64>,
    pub nf_db: f64,
}

impl Default for VgaParams {
    fn default() -> Self {
        Self {
            gain_min_db: 0.0,
            gain_max_db: 69.0,
            iip2_dbm: Some(50.0),
            iip3_dbm: Some(20.0),
            nf_db: 4.0,
        }
    }
}

/// Which signal feeds the reference matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    /// Transmitter output for linear mode, digital samples for widely-linear.
    Auto,
    /// PA output, rescaled to unit power.
    TxOutput,
    /// Original digital transmit samples.
    Digital,
}

/// Sample rate at which the channel is estimated and cancelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationRate {
    /// The simulation sample rate.
    Oversampled,
    /// Decimated by the oversampling factor. Taps then cover lags
    /// `-M/2..M/2` of the decimated channel.
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationParams {
    pub seed: u64,
    pub mode: EstimationMode,
    pub reference: ReferenceSource,
    pub estimation_rate: EstimationRate,
    /// Monte-Carlo trials per point.
    pub trials: usize,
    /// Samples in the block on which SINR is measured.
    pub measurement_len: usize,
    /// The no-calibration search covers sample counts up to this multiple
    /// of the predicted `N`.
    pub search_span: f64,
    pub iq_imbalance: bool,
    pub nonlinearity: bool,
    pub thermal_noise: bool,
    /// Confine thermal noise to the occupied subcarrier band, as after a
    /// receive channel filter; otherwise it is white at the sample rate.
    pub band_limited_noise: bool,
    pub quantization: bool,
    pub parallel: bool,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            seed: 1,
            mode: EstimationMode::Linear,
            reference: ReferenceSource::Auto,
            estimation_rate: EstimationRate::Oversampled,
            trials: 50,
            measurement_len: 4096,
            search_span: 2.0,
            iq_imbalance: true,
            nonlinearity: true,
            thermal_noise: true,
            band_limited_noise: true,
            quantization: true,
            parallel: false,
        }
    }
}

fn default_pa() -> RfStageParams {
    RfStageParams {
        gain_db: 27.0,
        iip2_dbm: None,
        iip3_dbm: Some(15.0),
        nf_db: 5.0,
    }
}

fn default_lna() -> RfStageParams {
    RfStageParams {
        gain_db: 25.0,
        iip2_dbm: None,
        iip3_dbm: Some(5.0),
        nf_db: 4.1,
    }
}

fn default_mixer() -> RfStageParams {
    RfStageParams {
        gain_db: 6.0,
        iip2_dbm: Some(50.0),
        iip3_dbm: Some(15.0),
        nf_db: 4.0,
    }
}

/// Complete simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransceiverConfig {
    #[serde(default)]
    pub system: SystemParams,
    #[serde(default)]
    pub ofdm: OfdmParams,
    #[serde(default)]
    pub iq: IqParams,
    #[serde(default)]
    pub adc: AdcParams,
    #[serde(default = "default_pa")]
    pub pa: RfStageParams,
    #[serde(default = "default_lna")]
    pub lna: RfStageParams,
    #[serde(default = "default_mixer")]
    pub mixer: RfStageParams,
    #[serde(default)]
    pub vga: VgaParams,
    #[serde(default)]
    pub channel: ChannelProfile,
    #[serde(default)]
    pub simulation: SimulationParams,
}

impl Default for TransceiverConfig {
    fn default() -> Self {
        Self {
            system: SystemParams::default(),
            ofdm: OfdmParams::default(),
            iq: IqParams::default(),
            adc: AdcParams::default(),
            pa: default_pa(),
            lna: default_lna(),
            mixer: default_mixer(),
            vga: VgaParams::default(),
            channel: ChannelProfile::default(),
            simulation: SimulationParams::default(),
        }
    }
}

impl TransceiverConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Short digest of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.n_tx == 0 || s.n_rx == 0 {
            return Err(Error::config("n_tx and n_rx must be at least 1"));
        }
        for (name, v) in [
            ("tx_power_dbm", s.tx_power_dbm),
            ("antenna_separation_db", s.antenna_separation_db),
            ("rx_noise_figure_db", s.rx_noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if !(s.rf_cancellation_db >= 0.0 && s.rf_cancellation_db.is_finite()) {
            return Err(Error::config(
                "rf_cancellation_db must be finite and non-negative",
            ));
        }
        if s.soi_power_dbm.is_nan() || s.soi_power_dbm == f64::INFINITY {
            return Err(Error::config("soi_power_dbm must be finite or -inf"));
        }
        self.ofdm.validate()?;
        IqImbalanceParams {
            irr_db: self.iq.tx_irr_db,
        }
        .validate()?;
        IqImbalanceParams {
            irr_db: self.iq.rx_irr_db,
        }
        .validate()?;
        self.adc.validate()?;
        self.pa.validate("pa")?;
        self.lna.validate("lna")?;
        self.mixer.validate("mixer")?;
        self.vga_stage(0.0).validate("vga")?;
        if !(self.vga.gain_min_db <= self.vga.gain_max_db) {
            return Err(Error::config("vga gain_min_db must not exceed gain_max_db"));
        }
        self.channel.validate()?;
        let sim = &self.simulation;
        if sim.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if sim.measurement_len <= self.channel.channel_len_m {
            return Err(Error::config("measurement_len must exceed channel_len_m"));
        }
        if !(sim.search_span >= 1.0 && sim.search_span.is_finite()) {
            return Err(Error::config("search_span must be at least 1"));
        }
        Ok(())
    }

    fn vga_stage(&self, gain_db: f64) -> RfStageParams {
        RfStageParams {
            gain_db,
            iip2_dbm: self.vga.iip2_dbm,
            iip3_dbm: self.vga.iip3_dbm,
            nf_db: self.vga.nf_db,
        }
    }

    /// Resolved reference source for the configured mode.
    pub fn reference_source(&self) -> ReferenceSource {
        match (self.simulation.reference, self.simulation.mode) {
            (ReferenceSource::Auto, EstimationMode::Linear) => ReferenceSource::TxOutput,
            (ReferenceSource::Auto, EstimationMode::WidelyLinear) => ReferenceSource::Digital,
            (r, _) => r,
        }
    }

    pub fn tx_chain(&self) -> TxChainConfig {
        TxChainConfig {
            iq: IqImbalanceParams {
                irr_db: self.iq.tx_irr_db,
            },
            pa: self.pa.clone(),
            tx_power_dbm: self.system.tx_power_dbm,
            iq_imbalance: self.simulation.iq_imbalance,
            nonlinearity: self.simulation.nonlinearity,
        }
    }

    pub fn rx_chain(&self) -> RxChainConfig {
        RxChainConfig {
            lna: self.lna.clone(),
            mixer: self.mixer.clone(),
            vga: self.vga_stage(0.0),
            vga_gain_min_db: self.vga.gain_min_db,
            vga_gain_max_db: self.vga.gain_max_db,
            iq: IqImbalanceParams {
                irr_db: self.iq.rx_irr_db,
            },
            adc: self.adc,
            noise_figure_db: self.system.rx_noise_figure_db,
            noise_bandwidth_hz: self.ofdm.bandwidth_hz,
            noise_occupancy: if self.simulation.band_limited_noise {
                self.ofdm.n_subcarriers as f64 / self.ofdm.fft_len() as f64
            } else {
                1.0
            },
            adc_full_scale: ADC_FULL_SCALE,
            thermal_noise: self.simulation.thermal_noise,
            iq_imbalance: self.simulation.iq_imbalance,
            nonlinearity: self.simulation.nonlinearity,
            quantization: self.simulation.quantization,
        }
    }

    /// Antenna-referred thermal noise floor in dBm.
    pub fn noise_floor_dbm(&self) -> f64 {
        thermal_noise_dbm(self.system.rx_noise_figure_db, self.ofdm.bandwidth_hz)
    }

    /// Half-duplex thermal SNR in dB.
    pub fn snr_db(&self) -> f64 {
        self.system.soi_power_dbm - self.noise_floor_dbm()
    }

    /// Half-duplex thermal SNR, linear; zero without a signal of interest.
    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db() / 10.0)
    }

    /// Copy with the signal of interest set for a target SNR.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        let mut cfg = self.clone();
        cfg.system.soi_power_dbm = self.noise_floor_dbm() + snr_db;
        cfg
    }

    /// Copy with every impairment switched off.
    pub fn idealized(&self) -> Self {
        let mut cfg = self.clone();
        let sim = &mut cfg.simulation;
        sim.iq_imbalance = false;
        sim.nonlinearity = false;
        sim.thermal_noise = false;
        sim.quantization = false;
        cfg
    }
}
