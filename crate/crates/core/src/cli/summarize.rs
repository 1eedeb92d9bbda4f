use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::read_metrics;

pub const SUMMARY_HEADER: [&str; 6] =
    ["run", "p", "time_to_threshold", "center_version_at_threshold", "final_disagreement", "speedup"];

/// One metrics file condensed to its threshold crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run: PathBuf,
    /// Worker count from the `resolved_config` next to the file, when present.
    pub p: Option<usize>,
    pub time_to_threshold: Option<f64>,
    pub center_version_at_threshold: Option<u64>,
    pub final_disagreement: Option<f64>,
    /// `T(1) / T(p)` against the first `p = 1` row that crossed.
    pub speedup: Option<f64>,
}

fn worker_count(metrics_path: &Path) -> Option<usize> {
    let dir = metrics_path.parent()?;
    let text = std::fs::read_to_string(dir.join("resolved_config")).ok()?;
    text.lines().find_map(|l| l.strip_prefix("p=")).and_then(|v| v.trim().parse().ok())
}

pub fn summarize(paths: &[PathBuf], threshold: f64) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::with_capacity(paths.len());
    for path in paths {
        let metrics = read_metrics(path)?;
        let crossing = metrics.iter().find(|m| m.objective <= threshold);
        rows.push(SummaryRow {
            run: path.clone(),
            p: worker_count(path),
            time_to_threshold: crossing.map(|m| m.wall_clock_s),
            center_version_at_threshold: crossing.map(|m| m.center_version),
            final_disagreement: metrics.last().and_then(|m| m.disagreement),
            speedup: None,
        });
    }
    let base = rows.iter().find(|r| r.p == Some(1)).and_then(|r| r.time_to_threshold);
    if let Some(t1) = base {
        for r in &mut rows {
            r.speedup = match r.time_to_threshold {
                Some(t) if t > 0.0 => Some(t1 / t),
                Some(_) if t1 == 0.0 => Some(1.0),
                _ => None,
            };
        }
    }
    Ok(rows)
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(SUMMARY_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.run.display().to_string(),
            cell(r.p),
            cell(r.time_to_threshold),
            cell(r.center_version_at_threshold),
            cell(r.final_disagreement),
            cell(r.speedup),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| io(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Expands `pattern` (sorted) and summarizes every match as CSV.
pub fn summarize_glob(pattern: &str, threshold: f64) -> Result<String> {
    let paths = glob::glob(pattern)
        .map_err(|e| Error::config(format!("bad glob {pattern:?}: {e}")))?
        .collect::<std::result::Result<Vec<PathBuf>, _>>()
        .map_err(|e| Error::Io(e.into()))?;
    if paths.is_empty() {
        return Err(Error::config(format!("no files match {pattern:?}")));
    }
    summary_to_csv(&summarize(&paths, threshold)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{write_metrics, MetricsRow};

    fn row(t: f64, objective: f64) -> MetricsRow {
        MetricsRow {
            wall_clock_s: t,
            sim_time: None,
            center_version: (t * 10.0) as u64,
            worker_id: -1,
            objective,
            dist_to_opt: None,
            disagreement: Some(0.5),
        }
    }

    fn run_dir(root: &Path, name: &str, p: usize, rows: &[MetricsRow]) -> PathBuf {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("resolved_config"), format!("mode=sim\np={p}\n")).unwrap();
        let path = dir.join("metrics.csv");
        write_metrics(&path, rows).unwrap();
        path
    }

    #[test]
    fn speedup_ratio_and_blanks() {
        let tmp = tempfile::tempdir().unwrap();
        let a = run_dir(tmp.path(), "a", 1, &[row(0.0, 5.0), row(10.0, 0.5)]);
        let b = run_dir(tmp.path(), "b", 4, &[row(0.0, 5.0), row(3.0, 0.9)]);
        let c = run_dir(tmp.path(), "c", 2, &[row(0.0, 5.0), row(3.0, 4.0)]);
        let rows = summarize(&[a, b, c], 1.0).unwrap();
        assert_eq!(rows[0].speedup, Some(1.0));
        assert!((rows[1].speedup.unwrap() - 3.333).abs() < 1e-3);
        assert_eq!(rows[1].center_version_at_threshold, Some(30));
        assert_eq!(rows[2].time_to_threshold, None);
        assert_eq!(rows[2].speedup, None);
        let csv = summary_to_csv(&rows).unwrap();
        assert!(csv.lines().nth(3).unwrap().ends_with(",2,,,0.5,"));
    }

    #[test]
    fn immediate_crossing() {
        let tmp = tempfile::tempdir().unwrap();
        let a = run_dir(tmp.path(), "a", 1, &[row(0.25, 0.1), row(1.0, 0.05)]);
        assert_eq!(summarize(&[a], 1.0).unwrap()[0].time_to_threshold, Some(0.25));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("m.csv");
        std::fs::write(&path, format!("{}\n1,,0,-1,0.5,,\nbad\n", crate::metrics::METRICS_HEADER)).unwrap();
        assert!(matches!(summarize(&[path], 1.0), Err(Error::Parse { line: 3, .. })));
    }
}
