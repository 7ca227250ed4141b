//! Experiment result rows and their CSV encoding.

use std::fmt;

use crate::cancellation::EstimationMode;

pub const RATIO_HEADER: &str =
    "experiment,mode,snr_db,n_c,n,ratio,predicted_ratio,sinr_db,trials,seed,flags";
pub const RATE_HEADER: &str =
    "experiment,n,t_coh_s,c_cal,c_nocal,sinr_c_db,sinr_nc_db,snr_db,trials,seed,flags";
pub const CRLB_HEADER: &str =
    "experiment,mode,n,m,sigma_n2,sigma_r2,variance,bound,ratio,trials,seed,flags";

/// Conditions attached to a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    /// The no-calibration SINR never reached the calibration target.
    Saturated,
    /// The matched SINR is further than the tolerance from the target.
    Unmatched,
    /// Calibration overhead exceeds the coherence interval.
    Infeasible,
    /// The AGC hit its gain limits in at least one trial.
    AgcClamped,
    /// No signal or noise to compare; the quantity is trivially fixed.
    Degenerate,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Saturated => "saturated",
            Flag::Unmatched => "unmatched",
            Flag::Infeasible => "infeasible",
            Flag::AgcClamped => "agc_clamped",
            Flag::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of the calibration sample-size search.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRecord {
    pub experiment: String,
    pub config_hash: String,
    pub mode: EstimationMode,
    pub snr_db: f64,
    pub n_c: usize,
    /// Matched no-calibration sample count, interpolated between grid
    /// points; `NaN` when saturated.
    pub n: f64,
    pub ratio: f64,
    pub predicted_ratio: f64,
    /// Mean calibration SINR, the matching target.
    pub sinr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub flags: Vec<Flag>,
}

/// Rates at one `(N, t_coh)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub experiment: String,
    pub config_hash: String,
    pub n: usize,
    pub t_coh_s: f64,
    /// `None` where the calibration does not fit the coherence interval.
    pub c_cal: Option<f64>,
    pub c_nocal: f64,
    pub sinr_c_db: f64,
    pub sinr_nc_db: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub seed: u64,
    pub flags: Vec<Flag>,
}

/// Monte-Carlo estimator variance against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbRecord {
    pub experiment: String,
    pub config_hash: String,
    pub mode: EstimationMode,
    pub n: usize,
    pub m: usize,
    pub sigma_n2: f64,
    pub sigma_r2: f64,
    /// Per-tap error variance, pooled over taps.
    pub variance: f64,
    pub bound: f64,
    pub ratio: f64,
    pub trials: usize,
    pub seed: u64,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentRecord {
    Ratio(RatioRecord),
    Rate(RateRecord),
    Crlb(CrlbRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Ratio,
    Rate,
    Crlb,
}

impl RecordKind {
    pub fn header(self) -> &'static str {
        match self {
            RecordKind::Ratio => RATIO_HEADER,
            RecordKind::Rate => RATE_HEADER,
            RecordKind::Crlb => CRLB_HEADER,
        }
    }
}

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn join_flags(flags: &[Flag]) -> String {
    flags
        .iter()
        .map(|f| f.as_str())
        .collect::<Vec<_>>()
        .join(";")
}

impl ExperimentRecord {
    pub fn kind(&self) -> RecordKind {
        match self {
            ExperimentRecord::Ratio(_) => RecordKind::Ratio,
            ExperimentRecord::Rate(_) => RecordKind::Rate,
            ExperimentRecord::Crlb(_) => RecordKind::Crlb,
        }
    }

    pub fn experiment(&self) -> &str {
        match self {
            ExperimentRecord::Ratio(r) => &r.experiment,
            ExperimentRecord::Rate(r) => &r.experiment,
            ExperimentRecord::Crlb(r) => &r.experiment,
        }
    }

    pub fn config_hash(&self) -> &str {
        match self {
            ExperimentRecord::Ratio(r) => &r.config_hash,
            ExperimentRecord::Rate(r) => &r.config_hash,
            ExperimentRecord::Crlb(r) => &r.config_hash,
        }
    }

    pub fn flags(&self) -> &[Flag] {
        match self {
            ExperimentRecord::Ratio(r) => &r.flags,
            ExperimentRecord::Rate(r) => &r.flags,
            ExperimentRecord::Crlb(r) => &r.flags,
        }
    }

    /// The row in the column order of [`RecordKind::header`].
    pub fn csv_row(&self) -> String {
        let f = format_number;
        match self {
            ExperimentRecord::Ratio(r) => [
                r.experiment.clone(),
                r.mode.to_string(),
                f(r.snr_db),
                r.n_c.to_string(),
                f(r.n),
                f(r.ratio),
                f(r.predicted_ratio),
                f(r.sinr_db),
                r.trials.to_string(),
                r.seed.to_string(),
                join_flags(&r.flags),
            ]
            .join(","),
            ExperimentRecord::Rate(r) => [
                r.experiment.clone(),
                r.n.to_string(),
                f(r.t_coh_s),
                r.c_cal.map(f).unwrap_or_default(),
                f(r.c_nocal),
                f(r.sinr_c_db),
                f(r.sinr_nc_db),
                f(r.snr_db),
                r.trials.to_string(),
                r.seed.to_string(),
                join_flags(&r.flags),
            ]
            .join(","),
            ExperimentRecord::Crlb(r) => [
                r.experiment.clone(),
                r.mode.to_string(),
                r.n.to_string(),
                r.m.to_string(),
                f(r.sigma_n2),
                f(r.sigma_r2),
                f(r.variance),
                f(r.bound),
                f(r.ratio),
                r.trials.to_string(),
                r.seed.to_string(),
                join_flags(&r.flags),
            ]
            .join(","),
        }
    }
}
