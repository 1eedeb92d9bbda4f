//! Learning-curve rows shared by the simulator, the center server and the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "wall_clock_s,sim_time,center_version,worker_id,objective,dist_to_opt,disagreement";

/// One learning-curve sample. `worker_id == -1` is the center. Optional
/// columns are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub wall_clock_s: f64,
    pub sim_time: Option<f64>,
    pub center_version: u64,
    pub worker_id: i64,
    pub objective: f64,
    pub dist_to_opt: Option<f64>,
    pub disagreement: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.wall_clock_s,
            opt(self.sim_time),
            self.center_version,
            self.worker_id,
            self.objective,
            opt(self.dist_to_opt),
            opt(self.disagreement)
        )
    }
}

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv_line());
    }
    out
}

/// Writes the rows and parses the file back to confirm it matches the schema.
pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, metrics_to_csv(rows))?;
    let back = read_metrics(path)?;
    if back.len() != rows.len() {
        return Err(Error::Parse {
            line: 0,
            message: format!("{} rows written, {} read back", rows.len(), back.len()),
        });
    }
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path)?;
    parse_metrics(&text)
}

/// Parses a metrics CSV, reporting the 1-based line of the first bad row.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    let header: Vec<&str> = header.iter().collect();
    if header.join(",") != METRICS_HEADER {
        return Err(Error::Parse { line: 1, message: format!("unexpected header {:?}", header.join(",")) });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |col: &str, cell: &str| Error::Parse { line, message: format!("bad {col} value {cell:?}") };
        let float = |j: usize, col: &str| -> Result<f64> {
            let cell = &record[j];
            cell.parse::<f64>().map_err(|_| bad(col, cell))
        };
        let opt_float = |j: usize, col: &str| -> Result<Option<f64>> {
            let cell = &record[j];
            if cell.is_empty() {
                Ok(None)
            } else {
                cell.parse::<f64>().map(Some).map_err(|_| bad(col, cell))
            }
        };
        if record.len() != 7 {
            return Err(Error::Parse { line, message: format!("expected 7 cells, got {}", record.len()) });
        }
        rows.push(MetricsRow {
            wall_clock_s: float(0, "wall_clock_s")?,
            sim_time: opt_float(1, "sim_time")?,
            center_version: record[2].parse().map_err(|_| bad("center_version", &record[2]))?,
            worker_id: record[3].parse().map_err(|_| bad("worker_id", &record[3]))?,
            objective: float(4, "objective")?,
            dist_to_opt: opt_float(5, "dist_to_opt")?,
            disagreement: opt_float(6, "disagreement")?,
        });
    }
    Ok(rows)
}
