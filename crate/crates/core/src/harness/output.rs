//! CSV and plot-script emission.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::record::{ExperimentRecord, RecordKind};

fn common_kind(records: &[ExperimentRecord]) -> Result<RecordKind> {
    let first = records
        .first()
        .ok_or_else(|| Error::usage("no records to write"))?;
    let kind = first.kind();
    if records.iter().any(|r| r.kind() != kind) {
        return Err(Error::usage(
            "records of different experiment kinds cannot share one CSV",
        ));
    }
    Ok(kind)
}

/// Header line followed by one row per record, `\n`-terminated.
pub fn to_csv_string(records: &[ExperimentRecord]) -> Result<String> {
    let kind = common_kind(records)?;
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(kind.header());
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    write(path, &to_csv_string(records)?)
}

const RATIO_PLOT: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for (mode, snr), g in rows.groupby(["mode", "snr_db"]):
    g = g.sort_values("n_c")
    line, = ax.plot(g["n_c"], g["ratio"], "o-", label=f"{mode}, SNR {snr:.1f} dB (measured)")
    ax.plot(g["n_c"], g["predicted_ratio"], "--", color=line.get_color(), label=f"{mode}, SNR {snr:.1f} dB (predicted)")
    sat = g[g["flags"].fillna("").str.contains("saturated")]
    ax.plot(sat["n_c"], [0] * len(sat), "x", color=line.get_color())
ax.set_xlabel("Calibration sample size $N_c$")
ax.set_ylabel("Sample size ratio $N / N_c$")
ax.grid(True)
ax.legend()
"#;

const RATE_PLOT: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for n, g in rows.groupby("n"):
    g = g.sort_values("t_coh_s")
    line, = ax.semilogx(g["t_coh_s"], g["c_cal"], "-", label=f"N = {n}, calibration")
    ax.semilogx(g["t_coh_s"], g["c_nocal"], "--", color=line.get_color(), label=f"N = {n}, no calibration")
ax.set_xlabel("SI channel coherence time (s)")
ax.set_ylabel("Achievable rate (bits/s/Hz)")
ax.grid(True, which="both")
ax.legend(fontsize="small")
"#;

const CRLB_PLOT: &str = r#"
fig, ax = plt.subplots(figsize=(6, 4))
for (mode, r2), g in rows.groupby(["mode", "sigma_r2"]):
    g = g.sort_values("n")
    line, = ax.loglog(g["n"], g["variance"], "o", label=f"{mode}, sigma_r2 = {r2:g} (Monte-Carlo)")
    ax.loglog(g["n"], g["bound"], "-", color=line.get_color(), label=f"{mode}, sigma_r2 = {r2:g} (bound)")
ax.set_xlabel("Estimation sample size $N$")
ax.set_ylabel("Per-tap error variance")
ax.grid(True, which="both")
ax.legend(fontsize="small")
"#;

/// Writes a standalone matplotlib script that plots `csv_path`.
pub fn emit_plot_script(records: &[ExperimentRecord], path: &Path, csv_path: &Path) -> Result<()> {
    let kind = common_kind(records)?;
    let body = match kind {
        RecordKind::Ratio => RATIO_PLOT,
        RecordKind::Rate => RATE_PLOT,
        RecordKind::Crlb => CRLB_PLOT,
    };
    let csv = csv_path
        .display()
        .to_string()
        .replace('\\', "\\\\")
        .replace('"', "\\\"");
    let script = format!(
        "#!/usr/bin/env python3\n\
         \"\"\"Plots {csv}. Usage: python3 <script> [csv] [output.png]\"\"\"\n\
         import sys\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\
         import pandas as pd\n\
         \n\
         src = sys.argv[1] if len(sys.argv) > 1 else \"{csv}\"\n\
         dst = sys.argv[2] if len(sys.argv) > 2 else src.rsplit(\".\", 1)[0] + \".png\"\n\
         rows = pd.read_csv(src)\n\
         {body}\n\
         fig.tight_layout()\n\
         fig.savefig(dst, dpi=150)\n\
         print(dst)\n"
    );
    write(path, &script)
}
