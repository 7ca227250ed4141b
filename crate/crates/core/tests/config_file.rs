use std::path::Path;

use fdsi_core::{Error, TransceiverConfig};

fn shipped() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/transceiver.toml")
}

#[test]
fn shipped_config_equals_defaults() {
    let cfg = TransceiverConfig::load(&shipped()).unwrap();
    assert_eq!(cfg, TransceiverConfig::default());
    assert_eq!(cfg.hash(), TransceiverConfig::default().hash());
}

#[test]
fn serialized_defaults_round_trip() {
    let text = TransceiverConfig::default().to_toml_string();
    assert_eq!(
        TransceiverConfig::from_toml_str(&text).unwrap(),
        TransceiverConfig::default()
    );
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    let text = std::fs::read_to_string(shipped()).unwrap();
    let typo = text.replace("tx_power_dbm", "tx_power_dB");
    let err = TransceiverConfig::from_toml_str(&typo).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 1);

    let bad = text.replace("cp_len = 16", "cp_len = 64");
    assert!(matches!(
        TransceiverConfig::from_toml_str(&bad),
        Err(Error::Config(_))
    ));
}

#[test]
fn missing_file_reports_path() {
    let err = TransceiverConfig::load(Path::new("/nonexistent/cfg.toml")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/cfg.toml"), "{err}");
}

#[test]
fn partial_file_fills_defaults() {
    let cfg = TransceiverConfig::from_toml_str("[simulation]\nseed = 9\nmode = \"wl\"\n").unwrap();
    assert_eq!(cfg.simulation.seed, 9);
    assert_eq!(cfg.system, TransceiverConfig::default().system);
}
