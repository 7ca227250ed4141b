//! Least-squares SI channel estimation and digital cancellation.
//!
//! The reference matrix stacks one convolution block per transmitter. Row
//! `r`, column `k` of the block for TX `j` holds `x_j(m - 1 + r - k)`, so `N`
//! reference samples give `N - M + 1` equations and the first `M - 1`
//! received samples are discarded. In widely-linear mode each block is
//! followed by its elementwise conjugate, modelling IQ image components.
//!
//! Estimates are computed by Householder QR of the reference matrix, never
//! by inverting `X^H X`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, StreamingQr};
use crate::signal::{power_to_dbm, ComplexBaseband};

/// Largest acceptable condition estimate of the reference matrix.
pub const MAX_CONDITION: f64 = 1e10;

/// Rows folded into the QR per update; keeps the working block in cache.
const ROW_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimationMode {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "wl")]
    WidelyLinear,
}

impl EstimationMode {
    /// Column blocks per transmitter.
    pub fn blocks_per_tx(self) -> usize {
        match self {
            EstimationMode::Linear => 1,
            EstimationMode::WidelyLinear => 2,
        }
    }

    pub fn columns(self, m: usize, n_tx: usize) -> usize {
        self.blocks_per_tx() * m * n_tx
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimationMode::Linear => "linear",
            EstimationMode::WidelyLinear => "wl",
        }
    }
}

impl std::fmt::Display for EstimationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EstimationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(EstimationMode::Linear),
            "wl" | "widely-linear" | "widely_linear" => Ok(EstimationMode::WidelyLinear),
            other => Err(Error::config(format!(
                "unknown estimation mode `{other}` (linear|wl)"
            ))),
        }
    }
}

/// Human-readable name of a reference-matrix column.
pub fn column_label(mode: EstimationMode, m: usize, col: usize) -> String {
    let per_tx = mode.blocks_per_tx() * m;
    let tx = col / per_tx;
    let within = col % per_tx;
    let (part, tap) = match mode {
        EstimationMode::Linear => ("direct", within),
        EstimationMode::WidelyLinear if within < m => ("direct", within),
        EstimationMode::WidelyLinear => ("image", within - m),
    };
    format!("TX {tx} {part} block (tap {tap})")
}

fn check_refs(refs: &[&[Complex64]], n: usize, m: usize) -> Result<()> {
    if refs.is_empty() {
        return Err(Error::usage("at least one reference signal is required"));
    }
    if m == 0 || m >= n {
        return Err(Error::usage(format!(
            "need 1 <= M < N, got M = {m}, N = {n}"
        )));
    }
    if let Some((j, r)) = refs.iter().enumerate().find(|(_, r)| r.len() < n) {
        return Err(Error::usage(format!(
            "reference {j} has {} samples but N = {n} are required",
            r.len()
        )));
    }
    Ok(())
}

/// Writes reference rows `[first_row, first_row + out.rows())` into `out`.
fn fill_rows(
    refs: &[&[Complex64]],
    first_row: usize,
    m: usize,
    mode: EstimationMode,
    out: &mut CMatrix,
) {
    let rows = out.rows();
    let per_tx = mode.blocks_per_tx() * m;
    for (j, x) in refs.iter().enumerate() {
        for k in 0..m {
            // Column k reads x(m - 1 + r - k) for r in the row range.
            let start = m - 1 + first_row - k;
            let src = &x[start..start + rows];
            out.col_mut(j * per_tx + k).copy_from_slice(src);
            if mode == EstimationMode::WidelyLinear {
                for (o, s) in out.col_mut(j * per_tx + m + k).iter_mut().zip(src) {
                    *o = s.conj();
                }
            }
        }
    }
}

/// The stacked convolution matrix of the reference signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMatrix {
    data: CMatrix,
    mode: EstimationMode,
    n: usize,
    m: usize,
    n_tx: usize,
}

impl ReferenceMatrix {
    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn mode(&self) -> EstimationMode {
        self.mode
    }

    /// Raw samples `N` the matrix was built from.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    /// Mean column power, the empirical `p_ref`.
    pub fn mean_column_power(&self) -> f64 {
        let total: f64 = (0..self.cols())
            .map(|c| self.data.col(c).iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum();
        total / (self.cols() * self.rows()) as f64
    }

    /// Householder factorization with a rank check.
    pub fn factor(&self, rhs: &[&[Complex64]]) -> Result<StreamingQr> {
        let mut qr = StreamingQr::new(self.cols(), rhs.len());
        let mut start = 0;
        while start < self.rows() {
            let len = ROW_CHUNK.min(self.rows() - start);
            let mut block = CMatrix::from_fn(len, self.cols(), |r, c| self.data[(start + r, c)]);
            let mut ys: Vec<Vec<Complex64>> =
                rhs.iter().map(|y| y[start..start + len].to_vec()).collect();
            qr.push_block(&mut block, &mut ys);
            start += len;
        }
        check_rank(&qr, self.mode, self.m)?;
        Ok(qr)
    }

    /// Received samples aligned with the matrix rows. Accepts either exactly
    /// `rows()` samples or at least `N` raw samples (then windowed to
    /// `[M-1, N)`).
    pub fn window_observation<'a>(&self, y: &'a [Complex64]) -> Result<&'a [Complex64]> {
        if y.len() == self.rows() {
            Ok(y)
        } else if y.len() >= self.n {
            Ok(&y[self.m - 1..self.n])
        } else {
            Err(Error::usage(format!(
                "observation has {} samples; expected {} rows or at least N = {}",
                y.len(),
                self.rows(),
                self.n
            )))
        }
    }
}

fn check_rank(qr: &StreamingQr, mode: EstimationMode, m: usize) -> Result<()> {
    if qr.rows_seen() < qr.cols() {
        return Err(Error::Estimation {
            block: "reference matrix".into(),
            detail: format!(
                "{} rows cannot determine {} taps",
                qr.rows_seen(),
                qr.cols()
            ),
        });
    }
    if let Some(col) = qr.first_weak_column(MAX_CONDITION) {
        return Err(Error::Estimation {
            block: column_label(mode, m, col),
            detail: format!(
                "reference matrix is rank deficient or ill-conditioned (condition estimate {:.3e} > {MAX_CONDITION:.0e})",
                qr.condition_estimate()
            ),
        });
    }
    Ok(())
}

/// Builds the reference matrix from the first `n` samples of each
/// reference signal.
pub fn build_reference_matrix(
    refs: &[ComplexBaseband],
    n: usize,
    m: usize,
    mode: EstimationMode,
) -> Result<ReferenceMatrix> {
    let slices: Vec<&[Complex64]> = refs.iter().map(|r| r.samples()).collect();
    check_refs(&slices, n, m)?;
    let rows = n - m + 1;
    let mut data = CMatrix::zeros(rows, mode.columns(m, refs.len()));
    fill_rows(&slices, 0, m, mode, &mut data);
    Ok(ReferenceMatrix {
        data,
        mode,
        n,
        m,
        n_tx: refs.len(),
    })
}

/// Estimated taps laid out like the reference-matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub taps: Vec<Complex64>,
    pub mode: EstimationMode,
    /// Mean power of the fitting residual `y - X h`, in dBm.
    pub residual_power_dbm: f64,
}

impl ChannelEstimate {
    /// Taps of TX `tx`: direct block, and image block in widely-linear mode.
    pub fn tx_blocks(&self, m: usize, tx: usize) -> (&[Complex64], Option<&[Complex64]>) {
        let per_tx = self.mode.blocks_per_tx() * m;
        let base = tx * per_tx;
        let direct = &self.taps[base..base + m];
        let image = match self.mode {
            EstimationMode::Linear => None,
            EstimationMode::WidelyLinear => Some(&self.taps[base + m..base + 2 * m]),
        };
        (direct, image)
    }
}

/// Least-squares estimate minimizing `||y - X h||^2`.
pub fn ls_estimate(x: &ReferenceMatrix, y: &ComplexBaseband) -> Result<ChannelEstimate> {
    Ok(ls_estimate_multi(x, std::slice::from_ref(y))?.remove(0))
}

/// Least-squares estimates for several receivers sharing one factorization.
pub fn ls_estimate_multi(
    x: &ReferenceMatrix,
    ys: &[ComplexBaseband],
) -> Result<Vec<ChannelEstimate>> {
    let windows = ys
        .iter()
        .map(|y| x.window_observation(y.samples()))
        .collect::<Result<Vec<_>>>()?;
    let qr = x.factor(&windows)?;
    (0..ys.len())
        .map(|k| {
            let taps = qr.solve(k)?;
            Ok(ChannelEstimate {
                taps,
                mode: x.mode,
                residual_power_dbm: power_to_dbm(qr.tail_energy(k) / x.rows() as f64),
            })
        })
        .collect()
}

/// `y - X h`, with `y` windowed to the matrix rows.
pub fn digital_cancel(
    y_adc: &ComplexBaseband,
    x: &ReferenceMatrix,
    est: &ChannelEstimate,
) -> Result<ComplexBaseband> {
    if est.taps.len() != x.cols() || est.mode != x.mode {
        return Err(Error::usage(format!(
            "estimate ({} taps, {}) does not match the reference matrix ({} columns, {})",
            est.taps.len(),
            est.mode,
            x.cols(),
            x.mode
        )));
    }
    let y = x.window_observation(y_adc.samples())?;
    let fit = x.data.mul_vec(&est.taps);
    Ok(y_adc.with_samples(y.iter().zip(&fit).map(|(a, b)| a - b).collect()))
}

/// SINR in dB: power of `soi_component` over the power of everything else
/// in `residual`. Returns `+inf` when nothing else remains.
pub fn measure_sinr(residual: &ComplexBaseband, soi_component: &ComplexBaseband) -> Result<f64> {
    let interference = residual.sub(soi_component)?;
    if residual.is_empty() {
        return Err(Error::usage("cannot measure SINR of an empty signal"));
    }
    let pi = interference.mean_power();
    if pi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (soi_component.mean_power() / pi).log10())
}

/// Incremental least squares over growing prefixes of the same reference
/// and observation streams.
///
/// Rows are folded in as `advance_to` raises the raw sample count `N`, so a
/// sweep over increasing `N` costs one factorization of the longest prefix.
#[derive(Debug, Clone)]
pub struct StreamingEstimator<'a> {
    refs: Vec<&'a [Complex64]>,
    ys: Vec<&'a [Complex64]>,
    m: usize,
    mode: EstimationMode,
    qr: StreamingQr,
    n: usize,
}

impl<'a> StreamingEstimator<'a> {
    pub fn new(
        refs: Vec<&'a [Complex64]>,
        ys: Vec<&'a [Complex64]>,
        m: usize,
        mode: EstimationMode,
    ) -> Result<Self> {
        if refs.is_empty() || m == 0 {
            return Err(Error::usage(
                "streaming estimator needs references and M >= 1",
            ));
        }
        let cols = mode.columns(m, refs.len());
        let n_rhs = ys.len();
        Ok(Self {
            refs,
            ys,
            m,
            mode,
            qr: StreamingQr::new(cols, n_rhs),
            n: m - 1,
        })
    }

    /// Raw samples consumed so far.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn advance_to(&mut self, n: usize) -> Result<()> {
        if n < self.n {
            return Err(Error::usage(format!(
                "cannot rewind from N = {} to {n}",
                self.n
            )));
        }
        let avail = self
            .refs
            .iter()
            .chain(self.ys.iter())
            .map(|s| s.len())
            .min()
            .unwrap_or(0);
        if n > avail {
            return Err(Error::usage(format!(
                "N = {n} exceeds the {avail} available samples"
            )));
        }
        let cols = self.qr.cols();
        while self.n < n {
            let first_row = self.n + 1 - self.m;
            let len = ROW_CHUNK.min(n - self.n);
            let mut block = CMatrix::zeros(len, cols);
            fill_rows(&self.refs, first_row, self.m, self.mode, &mut block);
            let mut rhs: Vec<Vec<Complex64>> = self
                .ys
                .iter()
                .map(|y| y[self.n..self.n + len].to_vec())
                .collect();
            self.qr.push_block(&mut block, &mut rhs);
            self.n += len;
        }
        Ok(())
    }

    /// Current estimates, one per observation stream.
    pub fn solve(&self) -> Result<Vec<Vec<Complex64>>> {
        check_rank(&self.qr, self.mode, self.m)?;
        (0..self.ys.len()).map(|k| self.qr.solve(k)).collect()
    }
}

/// A cancellation test block reduced to its QR form.
///
/// For observations `d_k = y_k - soi_k` and reference matrix `X`, the
/// interference-plus-noise power left after cancelling with taps `h` is
/// `(||z_k - R h||^2 + tail_k) / rows`, identical to measuring
/// `digital_cancel` followed by `measure_sinr` on the block.
#[derive(Debug, Clone)]
pub struct MeasurementBlock {
    qr: StreamingQr,
    rows: usize,
    soi_power: Vec<f64>,
}

impl MeasurementBlock {
    /// `y_adc[k]` and `soi[k]` are the digital received signal and its
    /// ground-truth SoI component at receiver `k`.
    pub fn new(
        refs: &[ComplexBaseband],
        y_adc: &[ComplexBaseband],
        soi: &[ComplexBaseband],
        m: usize,
        mode: EstimationMode,
    ) -> Result<Self> {
        if y_adc.len() != soi.len() {
            return Err(Error::usage("need one SoI component per receiver"));
        }
        let n = y_adc.iter().map(|y| y.len()).min().unwrap_or(0);
        let x = build_reference_matrix(refs, n, m, mode)?;
        let mut ds = Vec::with_capacity(y_adc.len());
        let mut soi_power = Vec::with_capacity(y_adc.len());
        for (y, s) in y_adc.iter().zip(soi) {
            if s.len() != y.len() {
                return Err(Error::usage(
                    "SoI component length differs from its observation",
                ));
            }
            let yw = x.window_observation(y.samples())?;
            let sw = x.window_observation(s.samples())?;
            soi_power.push(crate::signal::mean_power(sw));
            ds.push(yw.iter().zip(sw).map(|(a, b)| a - b).collect::<Vec<_>>());
        }
        let views: Vec<&[Complex64]> = ds.iter().map(|d| d.as_slice()).collect();
        let qr = x.factor(&views)?;
        Ok(Self {
            qr,
            rows: x.rows(),
            soi_power,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.soi_power.len()
    }

    /// Interference-plus-noise power at receiver `k` after cancelling with `taps`.
    pub fn interference_power(&self, k: usize, taps: &[Complex64]) -> f64 {
        let rh = self.qr.r().mul_vec(taps);
        let fit: f64 = rh
            .iter()
            .zip(self.qr.rotated_rhs(k))
            .map(|(a, b)| (b - a).norm_sqr())
            .sum();
        (fit + self.qr.tail_energy(k)) / self.rows as f64
    }

    /// Linear SINR at receiver `k`.
    pub fn sinr(&self, k: usize, taps: &[Complex64]) -> f64 {
        self.soi_power[k] / self.interference_power(k, taps)
    }
}
