//! Result files. Every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fracwave::{RunOutcome, RunStatus, SolutionTrace};
use serde::Serialize;
use serde_json::json;

use crate::scenario::Scenario;
use crate::CliError;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// `trace.csv` (time, then the u, ∂_t u and D_t^α u coefficient blocks) and `norms.csv`.
pub fn write_trace(dir: &Path, tr: &SolutionTrace) -> Result<(), CliError> {
    let n = tr.n_modes();
    let mut header = vec!["t".to_string()];
    for block in ["u", "dtu", "dalpha"] {
        header.extend((1..=n).map(|k| format!("{block}_{k}")));
    }
    let rows = (0..tr.len()).map(|i| {
        let mut r = Vec::with_capacity(1 + 3 * n);
        r.push(num(tr.times[i]));
        r.extend(tr.u[i].iter().chain(&tr.dtu[i]).chain(&tr.dalpha[i]).map(|&v| num(v)));
        r
    });
    write_atomic(&dir.join("trace.csv"), &csv_bytes(header, rows)?)?;

    let header = ["t", "norm_Vgamma_u", "norm_L2_dtu", "norm_Vminusgamma_dalpha"].map(String::from).to_vec();
    let rows = tr
        .norms
        .iter()
        .map(|r| vec![num(r.t), num(r.u_vgamma), num(r.dtu_l2), num(r.dalpha_vminusgamma)]);
    write_atomic(&dir.join("norms.csv"), &csv_bytes(header, rows)?)
}

pub fn write_outcome(dir: &Path, o: &RunOutcome) -> Result<(), CliError> {
    let t_est = match o.status {
        RunStatus::MaximalTimeDetected { t_est, .. } => Some(t_est),
        RunStatus::Completed { .. } => None,
    };
    let doc = json!({
        "status": o.status,
        "t_est": t_est,
        "windows": o.windows,
        "strong_check": o.strong_check,
        "regime": o.regime,
    });
    write_json(&dir.join("outcome.json"), &doc)
}

/// `summary.json`; the creation time is the only non-reproducible field and
/// lives under `metadata`.
pub fn write_summary(dir: &Path, s: &Scenario, tr: &SolutionTrace, o: Option<&RunOutcome>) -> Result<(), CliError> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let last = tr.norms.last();
    let doc = json!({
        "metadata": {
            "created_unix": created,
            "version": env!("CARGO_PKG_VERSION"),
        },
        "kind": if o.is_some() { "semilinear" } else { "linear" },
        "alpha": s.alpha,
        "n_modes": s.n_modes,
        "operator": s.operator,
        "dt": s.grid.dt,
        "t_end": s.grid.t_end,
        "samples": tr.len(),
        "final_time": tr.times.last(),
        "final_norms": last,
        "max_norm_Vgamma_u": tr.norms.iter().map(|r| r.u_vgamma).fold(0.0, f64::max),
        "status": o.map(|o| o.status),
        "warnings": tr.warnings,
    });
    write_json(&dir.join("summary.json"), &doc)
}
