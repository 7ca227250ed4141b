//! Least-squares estimation throughput: batch QR, streaming prefix sweeps
//! and measurement-block SINR queries.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fdsi_core::cancellation::{
    build_reference_matrix, ls_estimate_multi, MeasurementBlock, StreamingEstimator,
};
use fdsi_core::waveform::generate_ofdm_frames;
use fdsi_core::{ComplexBaseband, EstimationMode, OfdmParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const M: usize = 16;
const N_TX: usize = 2;

fn signals(n: usize, seed: u64) -> (Vec<ComplexBaseband>, Vec<ComplexBaseband>) {
    let params = OfdmParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_symbols = n.div_ceil(params.symbol_len());
    let refs: Vec<ComplexBaseband> = (0..N_TX)
        .map(|_| {
            let mut x = generate_ofdm_frames(&params, n_symbols, &mut rng)
                .unwrap()
                .into_samples();
            x.truncate(n);
            ComplexBaseband::new(x, params.sample_rate_hz).unwrap()
        })
        .collect();
    let ys = (0..2)
        .map(|_| {
            let y = (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            ComplexBaseband::new(y, params.sample_rate_hz).unwrap()
        })
        .collect();
    (refs, ys)
}

fn batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("ls_estimate");
    for mode in [EstimationMode::Linear, EstimationMode::WidelyLinear] {
        for n in [2000usize, 8192] {
            let (refs, ys) = signals(n, 1);
            g.throughput(Throughput::Elements(n as u64));
            g.bench_with_input(BenchmarkId::new(mode.as_str(), n), &n, |b, &n| {
                b.iter(|| {
                    let x = build_reference_matrix(&refs, n, M, mode).unwrap();
                    black_box(ls_estimate_multi(&x, &ys).unwrap())
                })
            });
        }
    }
    g.finish();
}

fn streaming(c: &mut Criterion) {
    let n = 20_000;
    let (refs, ys) = signals(n, 2);
    // Short prefixes of the oversampled reference are too ill-conditioned
    // to solve, so the sweep starts at N = 2000.
    let lengths: Vec<usize> = (4..=40).map(|k| k * n / 40).collect();
    let mut g = c.benchmark_group("streaming_sweep");
    g.sample_size(10);
    g.throughput(Throughput::Elements(n as u64));
    g.bench_function("linear_37_prefixes", |b| {
        b.iter(|| {
            let r: Vec<&[Complex64]> = refs.iter().map(|s| s.samples()).collect();
            let y: Vec<&[Complex64]> = ys.iter().map(|s| s.samples()).collect();
            let mut est = StreamingEstimator::new(r, y, M, EstimationMode::Linear).unwrap();
            for &len in &lengths {
                est.advance_to(len).unwrap();
                black_box(est.solve().unwrap());
            }
        })
    });
    g.finish();
}

fn sinr_query(c: &mut Criterion) {
    let n = 4096;
    let (refs, ys) = signals(n, 3);
    let soi: Vec<ComplexBaseband> = ys.iter().map(|y| y.scaled(0.1)).collect();
    let meas = MeasurementBlock::new(&refs, &ys, &soi, M, EstimationMode::Linear).unwrap();
    let taps = vec![Complex64::new(0.01, 0.0); M * N_TX];
    c.bench_function("measurement_block_sinr", |b| {
        b.iter(|| black_box(meas.sinr(0, black_box(&taps))))
    });
}

criterion_group!(benches, batch, streaming, sinr_query);
criterion_main!(benches);
