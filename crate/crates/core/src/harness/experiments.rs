//! Monte-Carlo experiments.
//!
//! Trials are independent given their [`TrialKey`], so they may run in any
//! order or in parallel; results are gathered in trial order and reduced
//! sequentially, which keeps every output bit-for-bit reproducible.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{
    crlb_per_tap, rate_no_calibration, rate_with_calibration, required_sample_ratio, NoiseProfile,
    RateScenario,
};
use crate::cancellation::{
    build_reference_matrix, digital_cancel, ls_estimate_multi, measure_sinr, EstimationMode,
    MeasurementBlock, StreamingEstimator,
};
use crate::error::{Error, Result, StageContext};
use crate::harness::config::TransceiverConfig;
use crate::harness::pipeline::{BlockKind, SimulatedBlock, TrialSimulator};
use crate::harness::record::{CrlbRecord, ExperimentRecord, Flag, RateRecord, RatioRecord};
use crate::rng::{Substream, TrialKey};
use crate::signal::ComplexBaseband;
use crate::waveform::{generate_ofdm_frames, OfdmParams};

pub const RATIO_EXPERIMENT: &str = "ratio";
pub const RATE_EXPERIMENT: &str = "rates";
pub const CRLB_EXPERIMENT: &str = "crlb";
pub const TRIAL_EXPERIMENT: &str = "trial";

/// SINR-matching tolerance of the sample-size search, in dB.
pub const MATCH_TOLERANCE_DB: f64 = 0.1;

/// Relative spacing of the no-calibration sample-size grid.
const GRID_STEP: f64 = 1.005;

/// Runs `f` for trials `0..n`, in parallel when asked, returning results in
/// trial order.
fn map_trials<T: Send>(
    n: usize,
    parallel: bool,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if parallel {
        (0..n as u64).into_par_iter().map(f).collect()
    } else {
        (0..n as u64).map(f).collect()
    }
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn check_estimation_len(cfg: &TransceiverConfig, n: usize) -> Result<()> {
    let m = cfg.channel.channel_len_m;
    let k = cfg.simulation.mode.columns(m, cfg.system.n_tx);
    if n < m + k - 1 {
        return Err(Error::usage(format!(
            "N = {n} gives fewer equations than the {k} unknowns (M = {m}); need N >= {}",
            m + k - 1
        )));
    }
    Ok(())
}

/// Measurement block with free-running AGC, reduced for fast SINR queries.
fn measurement(
    sim: &TrialSimulator<'_>,
    cfg: &TransceiverConfig,
) -> Result<(SimulatedBlock, MeasurementBlock)> {
    let block = sim.simulate(
        BlockKind::Measurement,
        cfg.simulation.measurement_len,
        true,
        None,
    )?;
    let reduced = MeasurementBlock::new(
        &block.refs,
        &block.received,
        &block.soi,
        cfg.channel.channel_len_m,
        cfg.simulation.mode,
    )
    .stage("measurement_block")?;
    Ok((block, reduced))
}

/// Result of [`run_single_trial`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// SINR per receiver, in dB.
    pub sinr_db: Vec<f64>,
    /// SINR of the receiver-averaged linear SINR, in dB.
    pub mean_sinr_db: f64,
    /// `||h_hat - h_eff|| / ||h_eff||` over all receivers.
    pub estimate_error_norm: f64,
    pub warnings: Vec<String>,
}

/// Trains on `n` samples (with or without the signal of interest) and
/// measures the SINR after digital cancellation on a fresh full-duplex block
/// of the same channel realization.
pub fn run_single_trial(
    cfg: &TransceiverConfig,
    n: usize,
    with_soi: bool,
    key: TrialKey<'_>,
) -> Result<TrialOutcome> {
    cfg.validate()?;
    check_estimation_len(cfg, n)?;
    let m = cfg.channel.channel_len_m;
    let mode = cfg.simulation.mode;
    let sim = TrialSimulator::new(cfg, key)?;
    let meas = sim.simulate(
        BlockKind::Measurement,
        cfg.simulation.measurement_len,
        true,
        None,
    )?;
    let est = sim.simulate(BlockKind::Estimation, n, with_soi, Some(&meas.vga_gains_db))?;

    let x = build_reference_matrix(&est.refs, n, m, mode).stage("build_reference_matrix")?;
    let estimates = ls_estimate_multi(&x, &est.received).stage("ls_estimate")?;
    let xm = build_reference_matrix(&meas.refs, cfg.simulation.measurement_len, m, mode)
        .stage("build_reference_matrix")?;

    let mut sinr_db = Vec::with_capacity(estimates.len());
    let (mut err, mut norm) = (0.0, 0.0);
    for (i, h) in estimates.iter().enumerate() {
        let residual = digital_cancel(&meas.received[i], &xm, h).stage("digital_cancel")?;
        let soi = meas.soi[i].window(m - 1, xm.rows())?;
        sinr_db.push(measure_sinr(&residual, &soi).stage("measure_sinr")?);
        let truth = sim.effective_channel(i, est.chain_gains_db[i], mode);
        err += h
            .taps
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        norm += truth.iter().map(|t| t.norm_sqr()).sum::<f64>();
    }
    let mean_lin = sinr_db.iter().map(|s| 10f64.powf(s / 10.0)).sum::<f64>() / sinr_db.len() as f64;
    let mut warnings = meas.warnings;
    warnings.extend(est.warnings);
    Ok(TrialOutcome {
        sinr_db,
        mean_sinr_db: to_db(mean_lin),
        estimate_error_norm: (err / norm).sqrt(),
        warnings,
    })
}

/// Sum over receivers of the linear SINR obtained with each estimate.
fn sinr_sum(meas: &MeasurementBlock, estimates: &[Vec<Complex64>]) -> f64 {
    estimates
        .iter()
        .enumerate()
        .map(|(i, h)| meas.sinr(i, h))
        .sum()
}

/// Linear SINR, summed over receivers, after training on each prefix length
/// in `lengths` (ascending). Lengths whose reference matrix is too
/// ill-conditioned to solve give NaN.
fn sinr_curve(
    sim: &TrialSimulator<'_>,
    cfg: &TransceiverConfig,
    meas: &MeasurementBlock,
    gains: &[f64],
    with_soi: bool,
    lengths: &[usize],
) -> Result<(Vec<f64>, bool)> {
    let n_max = *lengths.last().expect("non-empty lengths");
    let block = sim.simulate(BlockKind::Estimation, n_max, with_soi, Some(gains))?;
    let refs: Vec<&[Complex64]> = block.refs.iter().map(|r| r.samples()).collect();
    let ys: Vec<&[Complex64]> = block.received.iter().map(|r| r.samples()).collect();
    let mut est =
        StreamingEstimator::new(refs, ys, cfg.channel.channel_len_m, cfg.simulation.mode)?;
    let mut out = Vec::with_capacity(lengths.len());
    for &n in lengths {
        est.advance_to(n)?;
        match est.solve() {
            Ok(h) => out.push(sinr_sum(meas, &h)),
            Err(Error::Estimation { .. }) => out.push(f64::NAN),
            Err(e) => return Err(e).stage("ls_estimate"),
        }
    }
    Ok((out, !block.warnings.is_empty()))
}

/// Geometric grid from `lo` to at least `hi`, merged with `extra`.
fn sample_grid(lo: usize, hi: usize, extra: &[usize]) -> Vec<usize> {
    let mut grid: Vec<usize> = extra.to_vec();
    let mut v = lo as f64;
    loop {
        grid.push(v.round() as usize);
        if v >= hi as f64 {
            break;
        }
        v *= GRID_STEP;
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Matched sample count for one calibration target on a mean-SINR curve.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Match {
    n: f64,
    flags: (bool, bool),
}

/// First crossing of `target_db` at or after `start`, interpolated
/// linearly in `log N`. Flags are `(saturated, unmatched)`. NaN curve
/// points (unsolvable lengths) never count as a crossing.
fn find_crossing(grid: &[usize], curve_db: &[f64], start: usize, target_db: f64) -> Match {
    // Tolerance for equal-by-construction curves computed along different
    // rounding paths.
    const EPS_DB: f64 = 1e-9;
    let Some(j) = (start..grid.len()).find(|&j| curve_db[j] >= target_db - EPS_DB) else {
        return Match {
            n: f64::NAN,
            flags: (true, false),
        };
    };
    if j == start || curve_db[j - 1].is_nan() {
        let unmatched = (curve_db[j] - target_db).abs() > MATCH_TOLERANCE_DB;
        return Match {
            n: grid[j] as f64,
            flags: (false, unmatched),
        };
    }
    let (lo, hi) = (curve_db[j - 1], curve_db[j]);
    let t = ((target_db - lo) / (hi - lo)).clamp(0.0, 1.0);
    let (a, b) = ((grid[j - 1] as f64).ln(), (grid[j] as f64).ln());
    Match {
        n: (a + t * (b - a)).exp(),
        flags: (false, (hi - lo) > 2.0 * MATCH_TOLERANCE_DB),
    }
}

fn ratio_flags(saturated: bool, unmatched: bool, clamped: bool, degenerate: bool) -> Vec<Flag> {
    let mut flags = Vec::new();
    if saturated {
        flags.push(Flag::Saturated);
    }
    if unmatched {
        flags.push(Flag::Unmatched);
    }
    if clamped {
        flags.push(Flag::AgcClamped);
    }
    if degenerate {
        flags.push(Flag::Degenerate);
    }
    flags
}

/// Calibration sample-size search.
///
/// For each `N_c`, the mean calibration SINR over trials and receivers is
/// the target; the no-calibration sample count reaching the same mean SINR
/// is located on a fine geometric grid. Calibration and no-calibration runs
/// of a trial share channel, transmit data, noise and measurement block, so
/// the comparison is free of their sampling noise.
pub fn run_ratio_experiment(
    cfg: &TransceiverConfig,
    nc_values: &[usize],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    if nc_values.is_empty() {
        return Err(Error::usage("at least one N_c value is required"));
    }
    if trials < 10 {
        return Err(Error::usage(format!(
            "the sample-size search needs at least 10 trials, got {trials}"
        )));
    }
    let mut ncs = nc_values.to_vec();
    ncs.sort_unstable();
    ncs.dedup();
    for &nc in &ncs {
        check_estimation_len(cfg, nc)?;
    }
    let snr = if cfg.system.soi_power_dbm == f64::NEG_INFINITY {
        0.0
    } else {
        cfg.snr_linear()
    };
    let predicted = required_sample_ratio(snr);
    let n_max =
        (cfg.simulation.search_span * predicted * *ncs.last().unwrap() as f64).ceil() as usize;
    let grid = sample_grid(ncs[0], n_max, &ncs);
    let n_rx = cfg.system.n_rx as f64;

    let per_trial = map_trials(trials, cfg.simulation.parallel, |t| {
        let key = TrialKey::new(cfg.simulation.seed, RATIO_EXPERIMENT, t);
        let sim = TrialSimulator::new(cfg, key)?;
        let (block, meas) = measurement(&sim, cfg)?;
        let (cal, c1) = sinr_curve(&sim, cfg, &meas, &block.vga_gains_db, false, &ncs)?;
        let (nocal, c2) = sinr_curve(&sim, cfg, &meas, &block.vga_gains_db, true, &grid)?;
        Ok((cal, nocal, c1 || c2 || !block.warnings.is_empty()))
    })?;

    let scale = 1.0 / (trials as f64 * n_rx);
    let mut cal_db = vec![0.0; ncs.len()];
    let mut curve_db = vec![0.0; grid.len()];
    for (k, v) in cal_db.iter_mut().enumerate() {
        *v = to_db(per_trial.iter().map(|p| p.0[k]).sum::<f64>() * scale);
    }
    for (k, v) in curve_db.iter_mut().enumerate() {
        *v = to_db(per_trial.iter().map(|p| p.1[k]).sum::<f64>() * scale);
    }
    let clamped = per_trial.iter().any(|p| p.2);
    let degenerate = snr == 0.0;

    let hash = cfg.hash();
    Ok(ncs
        .iter()
        .zip(&cal_db)
        .map(|(&nc, &target)| {
            let start = grid.binary_search(&nc).expect("N_c values are on the grid");
            let unsolvable = target.is_nan();
            let m = if unsolvable {
                Match {
                    n: f64::NAN,
                    flags: (false, false),
                }
            } else {
                find_crossing(&grid, &curve_db, start, target)
            };
            ExperimentRecord::Ratio(RatioRecord {
                experiment: RATIO_EXPERIMENT.into(),
                config_hash: hash.clone(),
                mode: cfg.simulation.mode,
                snr_db: if degenerate {
                    f64::NEG_INFINITY
                } else {
                    cfg.snr_db()
                },
                n_c: nc,
                n: m.n,
                ratio: m.n / nc as f64,
                predicted_ratio: predicted,
                sinr_db: target,
                trials,
                seed: cfg.simulation.seed,
                flags: ratio_flags(m.flags.0, m.flags.1, clamped, degenerate || unsolvable),
            })
        })
        .collect())
}

/// Mean SINRs behind the rate curves at one estimation sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrPair {
    pub n: usize,
    pub sinr_c: f64,
    pub sinr_nc: f64,
}

/// Mean calibration and no-calibration SINR (linear, averaged over trials
/// and receivers) for each `N` in `n_values`.
pub fn measure_sinr_pairs(
    cfg: &TransceiverConfig,
    n_values: &[usize],
    trials: usize,
) -> Result<(Vec<SinrPair>, bool)> {
    cfg.validate()?;
    if n_values.is_empty() {
        return Err(Error::usage("at least one N value is required"));
    }
    if trials == 0 {
        return Err(Error::usage("trials must be at least 1"));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        check_estimation_len(cfg, n)?;
    }
    let per_trial = map_trials(trials, cfg.simulation.parallel, |t| {
        let key = TrialKey::new(cfg.simulation.seed, RATE_EXPERIMENT, t);
        let sim = TrialSimulator::new(cfg, key)?;
        let (block, meas) = measurement(&sim, cfg)?;
        let (cal, c1) = sinr_curve(&sim, cfg, &meas, &block.vga_gains_db, false, &ns)?;
        let (nocal, c2) = sinr_curve(&sim, cfg, &meas, &block.vga_gains_db, true, &ns)?;
        Ok((cal, nocal, c1 || c2 || !block.warnings.is_empty()))
    })?;
    let scale = 1.0 / (trials * cfg.system.n_rx) as f64;
    let pairs = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| SinrPair {
            n,
            sinr_c: per_trial.iter().map(|p| p.0[k]).sum::<f64>() * scale,
            sinr_nc: per_trial.iter().map(|p| p.1[k]).sum::<f64>() * scale,
        })
        .collect();
    Ok((pairs, per_trial.iter().any(|p| p.2)))
}

/// Achievable rates with and without calibration over a coherence-time grid.
///
/// The half-duplex SNR is the configured thermal SNR.
pub fn run_rate_experiment(
    cfg: &TransceiverConfig,
    n_values: &[usize],
    t_coh_grid: &[f64],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    if t_coh_grid.is_empty() {
        return Err(Error::usage("the coherence-time grid is empty"));
    }
    if let Some(t) = t_coh_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::usage(format!(
            "coherence times must be positive, got {t}"
        )));
    }
    let (pairs, clamped) = measure_sinr_pairs(cfg, n_values, trials)?;
    let snr = cfg.snr_linear();
    let hash = cfg.hash();
    let mut out = Vec::with_capacity(pairs.len() * t_coh_grid.len());
    for p in &pairs {
        let c_nocal = rate_no_calibration(p.sinr_nc);
        for &t in t_coh_grid {
            let scenario = RateScenario {
                n_c: p.n,
                t_coh: t,
                f_s: cfg.ofdm.sample_rate_hz,
                snr,
                sinr_c: p.sinr_c,
                sinr_nc: p.sinr_nc,
            };
            let mut flags = Vec::new();
            let c_cal = match rate_with_calibration(&scenario) {
                Ok(_) if p.sinr_c.is_nan() => None,
                Ok(c) => Some(c),
                Err(Error::Infeasible(_)) => {
                    flags.push(Flag::Infeasible);
                    None
                }
                Err(e) => return Err(e),
            };
            if clamped {
                flags.push(Flag::AgcClamped);
            }
            if p.sinr_c.is_nan() || p.sinr_nc.is_nan() {
                flags.push(Flag::Degenerate);
            }
            out.push(ExperimentRecord::Rate(RateRecord {
                experiment: RATE_EXPERIMENT.into(),
                config_hash: hash.clone(),
                n: p.n,
                t_coh_s: t,
                c_cal,
                c_nocal,
                sinr_c_db: to_db(p.sinr_c),
                sinr_nc_db: to_db(p.sinr_nc),
                snr_db: cfg.snr_db(),
                trials,
                seed: cfg.simulation.seed,
                flags,
            }));
        }
    }
    Ok(out)
}

/// Synthetic setup for checking LS efficiency against the per-tap bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbSetup {
    pub m: usize,
    pub n_tx: usize,
    pub mode: EstimationMode,
    /// Thermal noise power; zero gives a noiseless check.
    pub sigma_n2: f64,
    /// Signal-of-interest powers to sweep; zero is the calibration case.
    pub sigma_r2_values: Vec<f64>,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for CrlbSetup {
    fn default() -> Self {
        Self {
            m: 8,
            n_tx: 1,
            mode: EstimationMode::Linear,
            sigma_n2: 1.0,
            sigma_r2_values: vec![0.0, 10.0],
            seed: 1,
            parallel: false,
        }
    }
}

impl CrlbSetup {
    /// Synthetic counterpart of a transceiver configuration: same tap
    /// count, mode and seed.
    pub fn from_config(cfg: &TransceiverConfig) -> Self {
        Self {
            m: cfg.channel.channel_len_m,
            mode: cfg.simulation.mode,
            seed: cfg.simulation.seed,
            parallel: cfg.simulation.parallel,
            ..Self::default()
        }
    }
}

fn white_params() -> OfdmParams {
    OfdmParams::default().at_symbol_rate()
}

fn gaussian(n: usize, power: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let s = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * s
        })
        .collect()
}

/// One synthetic estimation: squared tap errors summed over taps, and the
/// mean column power of the reference matrix.
fn crlb_trial(setup: &CrlbSetup, n: usize, sigma_r2: f64, key: TrialKey<'_>) -> Result<(f64, f64)> {
    let params = white_params();
    let n_symbols = n.div_ceil(params.symbol_len());
    let refs = (0..setup.n_tx)
        .map(|j| {
            let mut rng = key.stream(Substream::EstimationData(j));
            let mut x = generate_ofdm_frames(&params, n_symbols, &mut rng)?.into_samples();
            x.truncate(n);
            ComplexBaseband::new(x, params.sample_rate_hz)
        })
        .collect::<Result<Vec<_>>>()?;
    let x = build_reference_matrix(&refs, n, setup.m, setup.mode)?;
    let mut rng = key.stream(Substream::Channel);
    let h = gaussian(x.cols(), 1.0, &mut rng);
    let mut y = x.data().mul_vec(&h);
    if setup.sigma_n2 > 0.0 {
        let mut rng = key.stream(Substream::EstimationNoise(0));
        for (v, z) in y
            .iter_mut()
            .zip(gaussian(x.rows(), setup.sigma_n2, &mut rng))
        {
            *v += z;
        }
    }
    if sigma_r2 > 0.0 {
        // White Gaussian, as the bound assumes; an OFDM stream would be
        // correlated across its cyclic prefix.
        let mut rng = key.stream(Substream::EstimationSoi(0));
        for (v, s) in y.iter_mut().zip(gaussian(x.rows(), sigma_r2, &mut rng)) {
            *v += s;
        }
    }
    let y = ComplexBaseband::new(y, params.sample_rate_hz)?;
    let est = ls_estimate_multi(&x, std::slice::from_ref(&y))?.remove(0);
    let err: f64 = est
        .taps
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok((err, x.mean_column_power()))
}

/// Monte-Carlo LS tap-error variance against the per-tap bound, for every
/// `N` in `n_grid` and every configured signal-of-interest power.
///
/// The reference is a white (symbol-rate) OFDM stream redrawn each trial,
/// the signal of interest white Gaussian; the variance is pooled over taps.
pub fn run_crlb_validation(
    setup: &CrlbSetup,
    n_grid: &[usize],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    if n_grid.is_empty() || setup.sigma_r2_values.is_empty() {
        return Err(Error::usage(
            "the N grid and noise profiles must be non-empty",
        ));
    }
    if trials < 2 {
        return Err(Error::usage("CRLB validation needs at least 2 trials"));
    }
    if !(setup.sigma_n2 >= 0.0) || setup.sigma_r2_values.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::usage("noise powers must be non-negative"));
    }
    let cols = setup.mode.columns(setup.m, setup.n_tx);
    let hash = format!("synthetic-m{}-tx{}-{}", setup.m, setup.n_tx, setup.mode);
    let mut out = Vec::new();
    for &sigma_r2 in &setup.sigma_r2_values {
        for &n in n_grid {
            let id = format!("{CRLB_EXPERIMENT}-n{n}-r{sigma_r2}");
            let results = map_trials(trials, setup.parallel, |t| {
                crlb_trial(setup, n, sigma_r2, TrialKey::new(setup.seed, &id, t))
            })?;
            let variance = results.iter().map(|r| r.0).sum::<f64>() / (trials * cols) as f64;
            let p_ref = results.iter().map(|r| r.1).sum::<f64>() / trials as f64;
            let total = setup.sigma_n2 + sigma_r2;
            let (bound, ratio, flags) = if total > 0.0 {
                let noise = NoiseProfile::new(setup.sigma_n2.max(f64::MIN_POSITIVE), sigma_r2)?;
                let b = crlb_per_tap(n, p_ref, noise);
                (b, variance / b, Vec::new())
            } else {
                (0.0, f64::NAN, vec![Flag::Degenerate])
            };
            out.push(ExperimentRecord::Crlb(CrlbRecord {
                experiment: CRLB_EXPERIMENT.into(),
                config_hash: hash.clone(),
                mode: setup.mode,
                n,
                m: setup.m,
                sigma_n2: setup.sigma_n2,
                sigma_r2,
                variance,
                bound,
                ratio,
                trials,
                seed: setup.seed,
                flags,
            }));
        }
    }
    Ok(out)
}
