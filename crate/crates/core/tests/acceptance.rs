//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failures are reported but do not fail the run unless
//! `FDSI_ACCEPTANCE_STRICT=1` is set.

use std::f64::consts::PI;
use std::time::Instant;

use fdsi_core::analysis::{
    break_even_coherence_time, crlb_per_tap, required_sample_ratio, NoiseProfile,
};
use fdsi_core::cancellation::{build_reference_matrix, ls_estimate};
use fdsi_core::channel::{convolve, draw_si_channel, propagate, rf_cancel};
use fdsi_core::harness::record::{CrlbRecord, RateRecord, RatioRecord};
use fdsi_core::harness::{
    run_crlb_validation, run_rate_experiment, run_ratio_experiment, to_csv_string, CrlbSetup, Flag,
};
use fdsi_core::rf_chain::{
    apply_iq_imbalance, apply_nonlinear_stage, input_referred_dbm, quantize_adc, receive_chain,
    transmit_chain, AdcParams, IqImbalanceParams,
};
use fdsi_core::waveform::{generate_ofdm_frames, generate_soi, measure_circularity};
use fdsi_core::{
    Complex64, ComplexBaseband, EstimationMode, ExperimentRecord, OfdmParams, TransceiverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FS: f64 = 64e6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn gaussian(n: usize, power: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let s = (power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * s
        })
        .collect()
}

fn sig(v: Vec<Complex64>) -> ComplexBaseband {
    ComplexBaseband::new(v, FS).unwrap()
}

fn tone(bin: i64, n: usize, amp: f64) -> ComplexBaseband {
    sig((0..n)
        .map(|k| Complex64::from_polar(amp, 2.0 * PI * (bin * k as i64) as f64 / n as f64))
        .collect())
}

fn bin_power(s: &ComplexBaseband, bin: i64) -> f64 {
    let n = s.len();
    let acc: Complex64 = s
        .samples()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            v * Complex64::from_polar(1.0, -2.0 * PI * (bin * k as i64) as f64 / n as f64)
        })
        .sum();
    (acc / n as f64).norm_sqr()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn ratio_records(records: &[ExperimentRecord]) -> Vec<&RatioRecord> {
    records
        .iter()
        .map(|r| match r {
            ExperimentRecord::Ratio(r) => r,
            other => panic!("unexpected record {other:?}"),
        })
        .collect()
}

fn describe_ratio(r: &RatioRecord) -> String {
    let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
    if flags.is_empty() {
        format!("N_c={} ratio {:.2}", r.n_c, r.ratio)
    } else {
        format!("N_c={} ratio {:.2} [{}]", r.n_c, r.ratio, flags.join(";"))
    }
}

fn criterion_1() -> Outcome {
    let golden = required_sample_ratio(10.0); // SNR 10 dB
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n_c: usize = rng.random_range(16..100_000);
        let p: f64 = rng.random_range(0.01..100.0);
        let snr = rng.random_range(1..200) as f64;
        let sigma2: f64 = rng.random_range(1e-6..10.0);
        let cal = crlb_per_tap(n_c, p, NoiseProfile::calibration(sigma2).unwrap());
        let n = (n_c as f64 * required_sample_ratio(snr)) as usize;
        let nocal = crlb_per_tap(n, p, NoiseProfile::new(sigma2, snr * sigma2).unwrap());
        worst = worst.max(((cal - nocal) / cal).abs());
    }
    outcome(
        golden == 11.0 && worst <= 4.0 * f64::EPSILON,
        format!(
            "ratio(10 dB) = {golden}; worst relative identity gap {worst:.1e} over 100 triples"
        ),
    )
}

fn criterion_2() -> Outcome {
    let setup = CrlbSetup {
        m: 8,
        sigma_n2: 1.0,
        sigma_r2_values: vec![0.0, 10.0],
        ..CrlbSetup::default()
    };
    let grid = [512, 1024, 2048, 4096, 8192, 16384];
    let records = run_crlb_validation(&setup, &grid, 1000).unwrap();
    let rows: Vec<&CrlbRecord> = records
        .iter()
        .map(|r| match r {
            ExperimentRecord::Crlb(c) => c,
            other => panic!("unexpected record {other:?}"),
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for r2 in [0.0, 10.0] {
        let sel: Vec<&&CrlbRecord> = rows.iter().filter(|r| r.sigma_r2 == r2).collect();
        let at = sel.iter().find(|r| r.n == 4096).unwrap();
        let xs: Vec<f64> = sel.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = sel.iter().map(|r| r.variance.ln()).collect();
        let s = slope(&xs, &ys);
        pass &= (0.95..=1.05).contains(&at.ratio) && (s + 1.0).abs() <= 0.05;
        parts.push(format!(
            "sigma_r2={r2}: var/bound {:.3} at N=4096, slope {s:.3}",
            at.ratio
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut cfg = TransceiverConfig::default().with_snr_db(14.0);
    cfg.simulation.mode = EstimationMode::Linear;
    let records = run_ratio_experiment(&cfg, &[500, 1000, 2000], 50).unwrap();
    let rows = ratio_records(&records);
    let target = required_sample_ratio(10f64.powf(1.4));
    let pass = rows.iter().all(|r| (r.ratio / target - 1.0).abs() <= 0.2);
    let parts: Vec<String> = rows.iter().map(|r| describe_ratio(r)).collect();
    outcome(pass, format!("predicted {target:.2}; {}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut cfg = TransceiverConfig::default().with_snr_db(14.0);
    cfg.simulation.mode = EstimationMode::WidelyLinear;
    let records = run_ratio_experiment(&cfg, &[500, 1000, 2000], 50).unwrap();
    let rows = ratio_records(&records);
    let mut pass = true;
    for r in &rows {
        if r.n_c == 500 {
            // Only completion and flagging are required here.
            pass &= r.ratio.is_finite() || !r.flags.is_empty();
        } else {
            pass &= (r.ratio / r.predicted_ratio - 1.0).abs() <= 0.2;
        }
    }
    let parts: Vec<String> = rows.iter().map(|r| describe_ratio(r)).collect();
    outcome(
        pass,
        format!(
            "predicted {:.2}; {}",
            rows[0].predicted_ratio,
            parts.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut cfg = TransceiverConfig::default().with_snr_db(14.0);
    cfg.simulation.mode = EstimationMode::WidelyLinear;
    let mut grid: Vec<f64> = (0..=50)
        .map(|k| 10f64.powf(-5.0 + 0.1 * k as f64))
        .collect();
    grid.push(0.1);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let records = run_rate_experiment(&cfg, &[500, 5000, 10000], &grid, 50).unwrap();
    let rows: Vec<&RateRecord> = records
        .iter()
        .map(|r| match r {
            ExperimentRecord::Rate(r) => r,
            other => panic!("unexpected record {other:?}"),
        })
        .collect();
    let of_n =
        |n: usize| -> Vec<&RateRecord> { rows.iter().copied().filter(|r| r.n == n).collect() };
    let at = |n: usize, t: f64| *of_n(n).iter().find(|r| r.t_coh_s == t).unwrap();

    // (a) and (b) are judged on every N whose estimate is solvable.
    let solvable: Vec<usize> = [500, 5000, 10000]
        .into_iter()
        .filter(|&n| !of_n(n)[0].flags.contains(&Flag::Degenerate))
        .collect();
    let mut a = !solvable.is_empty();
    let mut b = !solvable.is_empty();
    for &n in &solvable {
        let sweep = of_n(n);
        a &= sweep
            .iter()
            .all(|r| r.c_nocal.to_bits() == sweep[0].c_nocal.to_bits());
        let defined: Vec<f64> = sweep.iter().filter_map(|r| r.c_cal).collect();
        b &= !defined.is_empty() && defined.windows(2).all(|w| w[1] > w[0]);
    }
    let r500 = at(500, 0.1);
    let ratio_500 = r500.c_cal.map_or(f64::NAN, |c| c / r500.c_nocal);
    let c = (2.0..=4.0).contains(&ratio_500);
    let r5000 = at(5000, 0.1);
    let gain_5000 = r5000.c_cal.map_or(f64::NAN, |c| c - r5000.c_nocal);
    let d = (0.5..=3.0).contains(&gain_5000);
    let snr = cfg.snr_linear();
    let crossings: Vec<Option<f64>> = [5000, 10000]
        .iter()
        .map(|&n| {
            let r = at(n, 0.1);
            let lin = |x: f64| 10f64.powf(x / 10.0);
            break_even_coherence_time(
                n,
                cfg.ofdm.sample_rate_hz,
                snr,
                lin(r.sinr_c_db),
                lin(r.sinr_nc_db),
            )
        })
        .collect();
    let e = crossings
        .iter()
        .all(|t| t.is_some_and(|t| (1e-4..=1e-2).contains(&t)));
    let fmt_t = |t: &Option<f64>| t.map_or("none".to_string(), |t| format!("{t:.2e} s"));
    let unsolved = if r500.flags.contains(&Flag::Degenerate) {
        " (N=500 estimate unsolvable)"
    } else {
        ""
    };
    outcome(
        a && b && c && d && e,
        format!(
            "N judged for (a, b): {solvable:?}; (a) {} (b) {} (c) C_c/C_nc at N=500 = {ratio_500:.2}{unsolved} {} (d) gain at N=5000 = {gain_5000:.2} b/s/Hz {} (e) crossover N=5000 {}, N=10000 {} {}",
            if a { "ok" } else { "FAIL" },
            if b { "ok" } else { "FAIL" },
            if c { "ok" } else { "FAIL" },
            if d { "ok" } else { "FAIL" },
            fmt_t(&crossings[0]),
            fmt_t(&crossings[1]),
            if e { "ok" } else { "FAIL" },
        ),
    )
}

fn criterion_6() -> Outcome {
    let cfg = TransceiverConfig::default();
    let rx = cfg.rx_chain();
    let n = 1 << 16;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let zeros = ComplexBaseband::zeros(n, FS).unwrap();
    let noise = receive_chain(&zeros, &rx, &mut rng).unwrap();
    let floor = input_referred_dbm(&noise);

    let soi = generate_soi(&cfg.ofdm, cfg.system.soi_power_dbm, n, &mut rng).unwrap();
    let mut quiet = rx.clone();
    quiet.thermal_noise = false;
    let soi_out = receive_chain(&soi, &quiet, &mut rng).unwrap();
    let snr = input_referred_dbm(&soi_out) - floor;

    let tx = cfg.tx_chain();
    let mut si_power = 0.0;
    let draws = 50;
    for d in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + d);
        let frames: Vec<ComplexBaseband> = (0..cfg.system.n_tx)
            .map(|_| generate_ofdm_frames(&cfg.ofdm, 20, &mut rng).unwrap())
            .collect();
        let rf: Vec<ComplexBaseband> = frames
            .iter()
            .map(|x| transmit_chain(x, &tx).unwrap().rf_out)
            .collect();
        let ch = draw_si_channel(
            &cfg.channel,
            cfg.system.antenna_separation_db,
            cfg.system.n_rx,
            cfg.system.n_tx,
            &mut rng,
        )
        .unwrap();
        let si = propagate(&ch, &rf).unwrap();
        for (i, s) in si.iter().enumerate() {
            let out = rf_cancel(s, i, &rf, &ch, cfg.system.rf_cancellation_db).unwrap();
            si_power += out.signal.mean_power();
        }
    }
    let si_dbm = db(si_power / (draws as usize * cfg.system.n_rx) as f64);
    let pass =
        (floor + 98.9).abs() <= 0.3 && (snr - 14.0).abs() <= 0.3 && (si_dbm + 60.0).abs() <= 1.0;
    outcome(
        pass,
        format!("noise floor {floor:.2} dBm, SoI SNR {snr:.2} dB, SI at LNA {si_dbm:.2} dBm"),
    )
}

fn criterion_7() -> Outcome {
    let x = tone(37, 1024, 1.0);
    let irr = |db_irr: f64| {
        let y = apply_iq_imbalance(&x, &IqImbalanceParams { irr_db: db_irr });
        db(bin_power(&y, 37) / bin_power(&y, -37))
    };
    let (tx_irr, rx_irr) = (irr(25.0), irr(60.0));

    let cfg = TransceiverConfig::default();
    let n = 4096;
    let p_in_dbm = -33.0;
    let a = 10f64.powf(p_in_dbm / 20.0);
    let two = tone(100, n, a).add(&tone(130, n, a)).unwrap();
    let y = apply_nonlinear_stage(&two, &cfg.pa);
    let fund = db(bin_power(&y, 100));
    let im3 = db(0.5 * (bin_power(&y, 70) + bin_power(&y, 160)));
    let iip3 = p_in_dbm + (fund - im3) / 2.0;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = sig(gaussian(200_000, 1.0, &mut rng));
    let q = quantize_adc(
        &g,
        &AdcParams {
            bits: 12,
            papr_headroom_db: 10.0,
        },
    )
    .unwrap();
    let sqnr = db(g.mean_power() / g.sub(&q).unwrap().mean_power());

    let pass = (tx_irr - 25.0).abs() <= 0.2
        && (rx_irr - 60.0).abs() <= 0.5
        && (iip3 - 15.0).abs() <= 0.5
        && (sqnr - 60.0).abs() <= 1.0;
    outcome(
        pass,
        format!(
            "TX IRR {tx_irr:.2} dB, RX IRR {rx_irr:.2} dB, PA IIP3 {iip3:.2} dBm, ADC noise {sqnr:.2} dB below signal"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checks = Vec::new();

    let n = 2048;
    let refs = vec![
        sig(gaussian(n, 1.0, &mut rng)),
        sig(gaussian(n, 1.0, &mut rng)),
    ];
    let x = build_reference_matrix(&refs, n, 8, EstimationMode::WidelyLinear).unwrap();
    let h = gaussian(x.cols(), 1.0, &mut rng);
    let mut y = vec![Complex64::new(0.0, 0.0); 7];
    y.extend(x.data().mul_vec(&h));
    let est = ls_estimate(&x, &sig(y.clone())).unwrap();
    let rel: f64 = (est
        .taps
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / h.iter().map(|v| v.norm_sqr()).sum::<f64>())
    .sqrt();
    checks.push(("noiseless recovery", rel, rel <= 1e-10));

    let noisy: Vec<Complex64> = y
        .iter()
        .zip(gaussian(n, 0.1, &mut rng))
        .map(|(a, b)| a + b)
        .collect();
    let est = ls_estimate(&x, &sig(noisy.clone())).unwrap();
    let yw = &noisy[7..];
    let fit = x.data().mul_vec(&est.taps);
    let resid: Vec<Complex64> = yw.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let xr = x.data().adjoint_mul_vec(&resid);
    let orth = xr.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
        / (x.data().frobenius_norm() * resid.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
    checks.push(("LS orthogonality", orth, orth < 1e-8));

    let taps = gaussian(16, 1.0, &mut rng);
    let sx = gaussian(3000, 1.0, &mut rng);
    let fast = convolve(&taps, &sx);
    let mut conv_err = 0.0f64;
    for (k, v) in fast.iter().enumerate().take(sx.len()) {
        let naive: Complex64 = (0..taps.len())
            .filter(|&t| t <= k)
            .map(|t| taps[t] * sx[k - t])
            .sum();
        conv_err = conv_err.max((v - naive).norm() / naive.norm().max(1.0));
    }
    checks.push(("convolution vs naive", conv_err, conv_err <= 1e-12));

    let white = vec![sig(gaussian(4096, 1.0, &mut rng))];
    let xw = build_reference_matrix(&white, 4096, 8, EstimationMode::Linear).unwrap();
    let gram = xw.data().gram();
    let scale = xw.rows() as f64 * xw.mean_column_power();
    let mut off = 0.0f64;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            if i != j {
                off = off.max(gram[(i, j)].norm() / scale);
            }
        }
    }
    checks.push(("Gram off-diagonal", off, off < 0.05));

    let frames = generate_ofdm_frames(&OfdmParams::default(), 100, &mut rng).unwrap();
    let circ = measure_circularity(&frames).unwrap();
    checks.push(("OFDM circularity", circ, circ < 0.05));

    let setup = CrlbSetup::default();
    let a = to_csv_string(&run_crlb_validation(&setup, &[256, 512], 20).unwrap()).unwrap();
    let b = to_csv_string(&run_crlb_validation(&setup, &[256, 512], 20).unwrap()).unwrap();
    checks.push(("CSV replay", if a == b { 0.0 } else { 1.0 }, a == b));

    let pass = checks.iter().all(|c| c.2);
    let parts: Vec<String> = checks
        .iter()
        .map(|(name, v, ok)| format!("{name} {v:.1e}{}", if *ok { "" } else { " FAIL" }))
        .collect();
    outcome(pass, parts.join(", "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 sample-size relation", criterion_1),
        ("2 CRLB attainment", criterion_2),
        ("3 linear ratio", criterion_3),
        ("4 widely-linear ratio", criterion_4),
        ("5 rates vs coherence time", criterion_5),
        ("6 operating point", criterion_6),
        ("7 impairment calibration", criterion_7),
        ("8 property suites", criterion_8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 && std::env::var("FDSI_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
