//! Configuration, seeded Monte-Carlo experiments and result emission.

pub mod config;
pub mod experiments;
pub mod output;
pub mod pipeline;
pub mod record;

pub use config::{EstimationRate, ReferenceSource, TransceiverConfig};
pub use experiments::{
    measure_sinr_pairs, run_crlb_validation, run_rate_experiment, run_ratio_experiment,
    run_single_trial, CrlbSetup, SinrPair, TrialOutcome,
};
pub use output::{emit_csv, emit_plot_script, to_csv_string};
pub use record::{ExperimentRecord, Flag, RecordKind};
