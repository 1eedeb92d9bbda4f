use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, Rng};

/// Feature matrix with one `+1`/`-1` label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DenseMatrix,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(features: DenseMatrix, labels: Vec<f64>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::config(format!("{} feature rows but {} labels", features.rows(), labels.len())));
        }
        if let Some(bad) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(Error::config(format!("labels must be +1 or -1, got {bad}")));
        }
        Ok(Dataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }
}

/// `n` samples, half from `N(+separation * u, I)` labelled `+1` and half from
/// `N(-separation * u, I)` labelled `-1`, with `u = (1, .., 1) / sqrt(d)`.
/// With odd `n` the positive class gets the extra sample.
pub fn make_two_gaussians(n: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::config(format!("need at least 2 samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::config("feature dimension must be at least 1"));
    }
    if !separation.is_finite() {
        return Err(Error::config("separation must be finite"));
    }
    let mut rng = Rng::new(seed);
    let shift = separation / (d as f64).sqrt();
    let positives = n - n / 2;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i < positives { 1.0 } else { -1.0 };
        for _ in 0..d {
            data.push(y * shift + rng.normal());
        }
        labels.push(y);
    }
    Dataset::new(DenseMatrix::new(n, d, data)?, labels)
}

/// Reads `f0,...,f{d-1},label` with a header row. Labels may be `-1/+1` or
/// `0/1` (0 maps to -1). Non-numeric cells are rejected with their line number.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    let headers = reader.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    if headers.len() < 2 || headers.get(headers.len() - 1) != Some("label") {
        return Err(Error::Parse { line: 1, message: "header must be f0,...,f{d-1},label".into() });
    }
    let d = headers.len() - 1;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d + 1 {
            return Err(Error::Parse { line, message: format!("expected {} cells, got {}", d + 1, record.len()) });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::Parse { line, message: format!("non-numeric cell {cell:?} in column {j}") })?;
            if j < d {
                data.push(v);
            } else {
                labels.push(match v {
                    1.0 => 1.0,
                    v if v == 0.0 || v == -1.0 => -1.0,
                    other => {
                        return Err(Error::Parse { line, message: format!("label must be -1/+1 or 0/1, got {other}") })
                    }
                });
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    Dataset::new(DenseMatrix::new(labels.len(), d, data)?, labels)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    #[test]
    fn two_gaussians_is_deterministic() {
        let a = make_two_gaussians(50, 3, 1.0, 8).unwrap();
        let b = make_two_gaussians(50, 3, 1.0, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels.iter().filter(|l| **l > 0.0).count(), 25);
    }

    #[test]
    fn csv_round_trip_and_label_mapping() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "f0,f1,label\n1.0,2.0,1\n-1.5,0.25,0\n3,4,-1").unwrap();
        let ds = load_csv(f.path()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels, vec![1.0, -1.0, -1.0]);
        assert_eq!(ds.row(1), &[-1.5, 0.25]);
    }

    #[test]
    fn csv_rejects_non_numeric() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "f0,label\n1.0,1\nabc,0").unwrap();
        match load_csv(f.path()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_label() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "f0,y\n1.0,1").unwrap();
        assert!(matches!(load_csv(f.path()), Err(Error::Parse { line: 1, .. })));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "f0,label\n1.0,2").unwrap();
        assert!(matches!(load_csv(f.path()), Err(Error::Parse { line: 2, .. })));
    }
}
