//! `fdsi`: runs the estimation experiments and writes CSV plus a plot script.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime or estimation
//! error, 3 infeasible scenario.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdsi_core::harness::experiments::TRIAL_EXPERIMENT;
use fdsi_core::harness::{
    emit_csv, emit_plot_script, run_crlb_validation, run_rate_experiment, run_ratio_experiment,
    run_single_trial, to_csv_string, CrlbSetup, Flag,
};
use fdsi_core::rng::TrialKey;
use fdsi_core::{Error, EstimationMode, ExperimentRecord, Result, TransceiverConfig};

#[derive(Debug, Parser)]
#[command(
    name = "fdsi",
    version,
    about = "Full-duplex self-interference estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibration sample-size ratio N/N_c at matched SINR.
    Ratio {
        #[command(flatten)]
        common: Common,
        /// Calibration sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000])]
        nc: Vec<usize>,
        /// Thermal SNR in dB; overrides the configured SoI power.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Achievable rates with and without calibration over coherence time.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Estimation sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000, 5000, 10000])]
        n: Vec<usize>,
        /// Smallest coherence time in seconds.
        #[arg(long, default_value_t = 1e-5)]
        t_min: f64,
        /// Largest coherence time in seconds.
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        /// Log-spaced coherence times per sweep.
        #[arg(long, default_value_t = 51)]
        t_points: usize,
    },
    /// Monte-Carlo LS tap variance against the per-tap bound (synthetic).
    Crlb {
        #[command(flatten)]
        common: Common,
        /// Estimation sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [512, 1024, 2048, 4096, 8192, 16384])]
        n: Vec<usize>,
        /// Signal-of-interest powers relative to unit thermal noise.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0])]
        sigma_r2: Vec<f64>,
        /// Taps per link.
        #[arg(long, default_value_t = 8)]
        m: usize,
    },
    /// One trial: per-receiver SINR after training on N samples.
    Trial {
        #[command(flatten)]
        common: Common,
        /// Estimation sample size.
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Train during a calibration period (no signal of interest).
        #[arg(long)]
        calibration: bool,
        /// Trial index.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Prints the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Estimation model.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<EstimationMode>,
    /// Output CSV path; a plotting script is written next to it. Without it
    /// the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Run trials on all cores.
    #[arg(long)]
    parallel: bool,
}

fn parse_mode(s: &str) -> std::result::Result<EstimationMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<TransceiverConfig> {
        let mut cfg = load(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.simulation.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.simulation.mode = mode;
        }
        if let Some(trials) = self.trials {
            cfg.simulation.trials = trials;
        }
        cfg.simulation.parallel |= self.parallel;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: Option<&Path>) -> Result<TransceiverConfig> {
    match path {
        Some(p) => TransceiverConfig::load(p),
        None => Ok(TransceiverConfig::default()),
    }
}

fn plot_path(csv: &Path) -> PathBuf {
    csv.with_extension("py")
}

fn write(records: &[ExperimentRecord], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            emit_csv(records, path)?;
            let script = plot_path(path);
            emit_plot_script(records, &script, path)?;
            eprintln!("wrote {} and {}", path.display(), script.display());
        }
        None => print!("{}", to_csv_string(records)?),
    }
    Ok(())
}

fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points == 0 {
        return Err(Error::Usage(format!(
            "coherence-time range must satisfy 0 < t_min <= t_max with at least one point, got [{lo}, {hi}] x {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|k| lo * (step * k as f64).exp()).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ratio { common, nc, snr_db } => {
            let mut cfg = common.config()?;
            if let Some(snr) = snr_db {
                cfg = cfg.with_snr_db(snr);
            }
            let records = run_ratio_experiment(&cfg, &nc, cfg.simulation.trials)?;
            write(&records, common.out.as_deref())
        }
        Command::Rates {
            common,
            n,
            t_min,
            t_max,
            t_points,
        } => {
            let cfg = common.config()?;
            let grid = log_spaced(t_min, t_max, t_points)?;
            let records = run_rate_experiment(&cfg, &n, &grid, cfg.simulation.trials)?;
            write(&records, common.out.as_deref())?;
            if records
                .iter()
                .all(|r| r.flags().contains(&Flag::Infeasible))
            {
                return Err(Error::Infeasible(
                    "the calibration period exceeds every requested coherence interval".into(),
                ));
            }
            Ok(())
        }
        Command::Crlb {
            common,
            n,
            sigma_r2,
            m,
        } => {
            let cfg = common.config()?;
            let setup = CrlbSetup {
                m,
                sigma_r2_values: sigma_r2,
                ..CrlbSetup::from_config(&cfg)
            };
            let records = run_crlb_validation(&setup, &n, cfg.simulation.trials)?;
            write(&records, common.out.as_deref())
        }
        Command::Trial {
            common,
            n,
            calibration,
            index,
        } => {
            let cfg = common.config()?;
            let key = TrialKey::new(cfg.simulation.seed, TRIAL_EXPERIMENT, index);
            let outcome = run_single_trial(&cfg, n, !calibration, key)?;
            for (i, s) in outcome.sinr_db.iter().enumerate() {
                println!("rx {i}: SINR {s:.3} dB");
            }
            println!("mean SINR {:.3} dB", outcome.mean_sinr_db);
            println!("relative tap error {:.4e}", outcome.estimate_error_norm);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Config { config } => {
            let cfg = load(config.as_deref())?;
            cfg.validate()?;
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
