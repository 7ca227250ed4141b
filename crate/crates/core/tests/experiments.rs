use fdsi_core::harness::{
    measure_sinr_pairs, run_crlb_validation, run_rate_experiment, run_ratio_experiment,
    to_csv_string, CrlbSetup, EstimationRate, Flag,
};
use fdsi_core::{EstimationMode, ExperimentRecord, TransceiverConfig};

fn quick() -> TransceiverConfig {
    let mut cfg = TransceiverConfig::default();
    cfg.simulation.measurement_len = 2048;
    cfg
}

#[test]
fn parallel_and_serial_trials_give_identical_csv() {
    let mut cfg = quick();
    let serial = to_csv_string(&run_ratio_experiment(&cfg, &[2000], 10).unwrap()).unwrap();
    cfg.simulation.parallel = true;
    let parallel = to_csv_string(&run_ratio_experiment(&cfg, &[2000], 10).unwrap()).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn seed_changes_results() {
    let mut cfg = quick();
    let a = to_csv_string(&run_ratio_experiment(&cfg, &[2000], 10).unwrap()).unwrap();
    cfg.simulation.seed = 2;
    let b = to_csv_string(&run_ratio_experiment(&cfg, &[2000], 10).unwrap()).unwrap();
    assert_ne!(a, b);
}

#[test]
fn calibration_beats_no_calibration_at_equal_n() {
    let (pairs, _) = measure_sinr_pairs(&quick(), &[2000, 8000], 10).unwrap();
    for p in &pairs {
        assert!(p.sinr_c > p.sinr_nc, "{p:?}");
    }
    // More samples help both.
    assert!(pairs[1].sinr_c > pairs[0].sinr_c && pairs[1].sinr_nc > pairs[0].sinr_nc);
}

#[test]
fn unsolvable_short_blocks_are_flagged_not_fatal() {
    let mut cfg = quick();
    cfg.simulation.mode = EstimationMode::WidelyLinear;
    let records = run_ratio_experiment(&cfg, &[500], 10).unwrap();
    match &records[0] {
        ExperimentRecord::Ratio(r) => {
            assert!(r.ratio.is_nan());
            assert!(r.flags.contains(&Flag::Degenerate));
        }
        other => panic!("{other:?}"),
    }
    let rates = run_rate_experiment(&cfg, &[500], &[0.1], 10).unwrap();
    assert!(rates[0].flags().contains(&Flag::Degenerate));
}

#[test]
fn rate_records_mark_infeasible_coherence_times() {
    let rates = run_rate_experiment(&quick(), &[2000], &[1e-6, 0.1], 10).unwrap();
    assert_eq!(rates[0].flags(), &[Flag::Infeasible]);
    assert!(rates[1].flags().is_empty());
    let text = to_csv_string(&rates).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("rates,2000,1e-06,,"));
}

#[test]
fn symbol_rate_estimation_is_floor_limited() {
    let mut cfg = quick();
    cfg.simulation.estimation_rate = EstimationRate::Symbol;
    let (pairs, _) = measure_sinr_pairs(&cfg, &[500], 10).unwrap();
    // The truncated decimated channel leaves SI well above the noise.
    assert!(
        10.0 * pairs[0].sinr_c.log10() < cfg.snr_db() - 3.0,
        "{pairs:?}"
    );
}

#[test]
fn crlb_zero_noise_is_degenerate_with_zero_variance() {
    let setup = CrlbSetup {
        sigma_n2: 0.0,
        sigma_r2_values: vec![0.0],
        ..CrlbSetup::default()
    };
    let records = run_crlb_validation(&setup, &[512], 4).unwrap();
    match &records[0] {
        ExperimentRecord::Crlb(r) => {
            assert!(r.variance < 1e-25, "{}", r.variance);
            assert_eq!(r.flags, vec![Flag::Degenerate]);
        }
        other => panic!("{other:?}"),
    }
}
