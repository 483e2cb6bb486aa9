use std::path::Path;

use anyhow::{Context, Result};

use crate::experiment::RunReport;

pub const CSV_HEADER: [&str; 6] = ["config", "algorithm", "mean_time_s", "stderr_s", "consistent", "speedup"];

fn consistency(v: Option<bool>) -> String {
    match v {
        Some(b) => b.to_string(),
        None => "unverified".into(),
    }
}

/// Write `<path>` as CSV (two lines per row) and `<path>.json` with full detail.
pub fn export_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(CSV_HEADER)?;
    for row in &report.rows {
        let label = row.config.label();
        let consistent = consistency(row.consistent);
        w.write_record([
            label.as_str(),
            "pft-dpw",
            &row.baseline.mean_s.to_string(),
            &row.baseline.stderr_s.to_string(),
            &consistent,
            "1",
        ])?;
        w.write_record([
            label.as_str(),
            "sith-pft",
            &row.sith.mean_s.to_string(),
            &row.sith.stderr_s.to_string(),
            &consistent,
            &row.speedup.to_string(),
        ])?;
    }
    w.flush()?;
    let json = sidecar_path(path);
    std::fs::write(&json, serde_json::to_string_pretty(report)?)
        .with_context(|| format!("writing {}", json.display()))?;
    Ok(())
}

pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

/// Load the JSON sidecar written by [`export_report`].
pub fn load_report(json: impl AsRef<Path>) -> Result<RunReport> {
    let json = json.as_ref();
    let text = std::fs::read_to_string(json).with_context(|| format!("reading {}", json.display()))?;
    Ok(serde_json::from_str(&text)?)
}
