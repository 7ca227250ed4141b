use std::fs;
use std::process::{Command, Output};

fn fdsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdsi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn crlb_writes_csv_and_plot_script_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("crlb.csv");
    let args = [
        "crlb",
        "--n",
        "256,512",
        "--trials",
        "20",
        "--seed",
        "3",
        "--out",
        csv.to_str().unwrap(),
    ];
    let o = fdsi(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(&csv).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with(
        "experiment,mode,n,m,sigma_n2,sigma_r2,variance,bound,ratio,trials,seed,flags\n"
    ));
    assert_eq!(text.lines().count(), 5);
    assert!(dir.path().join("crlb.py").exists());

    assert!(fdsi(&args).status.success());
    assert_eq!(fs::read(&csv).unwrap(), first);
}

#[test]
fn ratio_prints_csv_to_stdout() {
    let o = fdsi(&[
        "ratio", "--nc", "2000", "--trials", "10", "--mode", "linear",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "experiment,mode,snr_db,n_c,n,ratio,predicted_ratio,sinr_db,trials,seed,flags"
    );
    assert!(lines[1].starts_with("ratio,linear,"));
}

#[test]
fn trial_reports_sinr_per_receiver() {
    let o = fdsi(&["trial", "--n", "2000", "--calibration"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rx 0: SINR") && text.contains("rx 1: SINR"));
}

#[test]
fn config_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdsi(&["config"]);
    assert!(o.status.success());
    let path = dir.path().join("cfg.toml");
    fs::write(&path, stdout(&o)).unwrap();
    let again = fdsi(&["config", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[system]\nbogus_key = 1\n").unwrap();
    assert_eq!(
        fdsi(&["ratio", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    // Fewer samples than unknowns.
    assert_eq!(fdsi(&["trial", "--n", "20"]).status.code(), Some(2));

    // Two calibration blocks of 2000 samples overrun a 1 us coherence interval.
    let o = fdsi(&[
        "rates",
        "--n",
        "2000",
        "--trials",
        "2",
        "--t-min",
        "1e-6",
        "--t-max",
        "1e-6",
        "--t-points",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("infeasible"));

    assert_eq!(
        fdsi(&["ratio", "--mode", "nonlinear"]).status.code(),
        Some(2)
    );
}
