use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stability::{build_round_map, MapAlgorithm, RoundMapSpec};

/// Cells with a radius below `1 - STABLE_MARGIN` count as stable.
pub const STABLE_MARGIN: f64 = 1e-10;

pub const GRID_HEADER: &str = "eta_h,alpha,radius,stable";

pub fn is_stable(radius: f64) -> bool {
    radius < 1.0 - STABLE_MARGIN
}

/// `[from * step, (from + 1) * step, ..., to * step]`, each value computed as
/// `k * step` so that axes do not accumulate rounding.
pub fn grid_axis(step: f64, from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|k| k as f64 * step).collect()
}

/// Spectral radii over `eta_h x alpha` with `h = 1`, stored row-major
/// (outer index over `eta_h`).
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub base: RoundMapSpec,
    pub eta_h: Vec<f64>,
    pub alpha: Vec<f64>,
    pub radius: Vec<f64>,
}

impl StabilityGrid {
    pub fn radius_at(&self, i: usize, j: usize) -> f64 {
        self.radius[i * self.alpha.len() + j]
    }

    pub fn stable_at(&self, i: usize, j: usize) -> bool {
        is_stable(self.radius_at(i, j))
    }

    /// `(eta_h, alpha, radius)` in row order.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.eta_h
            .iter()
            .flat_map(move |e| self.alpha.iter().map(move |a| (*e, *a)))
            .zip(&self.radius)
            .map(|((e, a), r)| (e, a, *r))
    }

    pub fn max_radius(&self) -> f64 {
        self.radius.iter().copied().fold(0.0, f64::max)
    }

    pub fn unstable_count(&self) -> usize {
        self.radius.iter().filter(|r| !is_stable(**r)).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for (e, a, r) in self.cells() {
            let _ = writeln!(out, "{e},{a},{r},{}", is_stable(r));
        }
        out
    }

    /// Writes the CSV and parses it back.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        let back = parse_grid_csv(&std::fs::read_to_string(path)?)?;
        if back.len() != self.radius.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} cells written, {} read back", self.radius.len(), back.len()),
            });
        }
        Ok(())
    }
}

/// One parsed grid row: `(eta_h, alpha, radius, stable)`.
pub type GridRow = (f64, f64, f64, bool);

/// Parses a stability grid CSV and checks each `stable` flag against its radius.
pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(GRID_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("expected header {GRID_HEADER:?}") });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |msg: &str| Error::Parse { line: i as u64 + 2, message: format!("{msg}: {line:?}") };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(bad("expected 4 cells"));
            }
            let num = |c: &str| c.parse::<f64>().map_err(|_| bad("bad number"));
            let (e, a, r) = (num(cells[0])?, num(cells[1])?, num(cells[2])?);
            let stable: bool = cells[3].parse().map_err(|_| bad("bad stable flag"))?;
            if r < 0.0 || stable != is_stable(r) {
                return Err(bad("radius and stable flag disagree"));
            }
            Ok((e, a, r, stable))
        })
        .collect()
}

/// The spec `base` evaluated at one grid cell: `h = 1`, `eta = eta_h` and
/// `rho = alpha / eta`.
pub fn cell_spec(base: &RoundMapSpec, eta_h: f64, alpha: f64) -> Result<RoundMapSpec> {
    let rho = if eta_h > 0.0 {
        alpha / eta_h
    } else if alpha == 0.0 {
        0.0
    } else {
        return Err(Error::config(format!("cell (eta_h={eta_h}, alpha={alpha}): alpha > 0 needs eta_h > 0")));
    };
    Ok(RoundMapSpec { h: 1.0, eta: eta_h, rho, ..*base })
}

/// Scans `base` (its `h`, `eta` and `rho` are replaced per cell).
pub fn scan_stability_with(base: &RoundMapSpec, eta_h: &[f64], alpha: &[f64]) -> Result<StabilityGrid> {
    if eta_h.is_empty() || alpha.is_empty() {
        return Err(Error::config("stability grid axes must be nonempty"));
    }
    let mut radius = Vec::with_capacity(eta_h.len() * alpha.len());
    for &e in eta_h {
        for &a in alpha {
            let at = |err: Error| match err {
                Error::Numerics(m) => Error::Numerics(format!("cell (eta_h={e}, alpha={a}): {m}")),
                other => other,
            };
            let spec = cell_spec(base, e, a)?;
            radius.push(build_round_map(&spec).and_then(|m| m.spectral_radius()).map_err(at)?);
        }
    }
    Ok(StabilityGrid { base: cell_spec(base, 1.0, 0.0)?, eta_h: eta_h.to_vec(), alpha: alpha.to_vec(), radius })
}

pub fn scan_stability(algorithm: MapAlgorithm, p: usize, eta_h: &[f64], alpha: &[f64]) -> Result<StabilityGrid> {
    scan_stability_with(&RoundMapSpec::new(algorithm, p, 1.0, 0.0, 0.0), eta_h, alpha)
}

/// A cell where exactly one of the two round-robin schemes is stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferingCell {
    pub eta_h: f64,
    pub alpha: f64,
    pub easgd_radius: f64,
    pub admm_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub easgd: StabilityGrid,
    pub admm: StabilityGrid,
    pub differing: Vec<DifferingCell>,
}

impl ComparisonReport {
    /// Cells where ADMM has radius above one while EASGD is stable.
    pub fn admm_only_unstable(&self) -> Vec<DifferingCell> {
        self.differing.iter().copied().filter(|c| c.admm_radius > 1.0 && is_stable(c.easgd_radius)).collect()
    }

    pub fn easgd_only_unstable(&self) -> Vec<DifferingCell> {
        self.differing.iter().copied().filter(|c| !is_stable(c.easgd_radius)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = self.easgd.base.p;
        let cells = self.easgd.radius.len();
        let _ = writeln!(out, "round-robin comparison, p = {p}, {cells} cells");
        let _ =
            writeln!(out, "easgd_rr: {} unstable, max radius {}", self.easgd.unstable_count(), self.easgd.max_radius());
        let _ =
            writeln!(out, "admm_rr: {} unstable, max radius {}", self.admm.unstable_count(), self.admm.max_radius());
        let _ = writeln!(out, "cells with ADMM radius > 1 and EASGD stable: {}", self.admm_only_unstable().len());
        let _ = writeln!(out, "cells with EASGD unstable and ADMM stable: {}", self.easgd_only_unstable().len());
        for c in &self.differing {
            let _ =
                writeln!(out, "  eta_h={} alpha={} easgd={} admm={}", c.eta_h, c.alpha, c.easgd_radius, c.admm_radius);
        }
        out
    }
}

/// Scans round-robin EASGD and ADMM over the same cells and lists where
/// their stability verdicts differ.
pub fn compare_easgd_admm(p: usize, eta_h: &[f64], alpha: &[f64]) -> Result<ComparisonReport> {
    let easgd = scan_stability(MapAlgorithm::EasgdRr, p, eta_h, alpha)?;
    let admm = scan_stability(MapAlgorithm::AdmmRr, p, eta_h, alpha)?;
    let differing = easgd
        .cells()
        .zip(admm.cells())
        .filter(|((_, _, re), (_, _, ra))| is_stable(*re) != is_stable(*ra))
        .map(|((e, a, re), (_, _, ra))| DifferingCell { eta_h: e, alpha: a, easgd_radius: re, admm_radius: ra })
        .collect();
    Ok(ComparisonReport { easgd, admm, differing })
}

/// Radius of synchronous single-worker EASGD along `eta_h` at fixed `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub alpha: f64,
    pub eta_h: Vec<f64>,
    pub radius: Vec<f64>,
    /// `eta_h` values whose radius is not below `1 - STABLE_MARGIN`.
    pub violations: Vec<f64>,
    /// Largest change in radius between neighbouring samples.
    pub max_jump: f64,
}

/// Samples `eta_h = k * step` for every `k` with `0 < k * step < 2`.
pub fn sync_boundary_scan(alpha: f64, step: f64) -> Result<BoundaryReport> {
    if !(step > 0.0 && step < 2.0) {
        return Err(Error::config(format!("step must lie in (0, 2), got {step}")));
    }
    let last = ((2.0 / step).ceil() as u32).saturating_sub(1);
    let eta_h: Vec<f64> = grid_axis(step, 1, last).into_iter().filter(|e| *e < 2.0).collect();
    let grid = scan_stability(MapAlgorithm::EasgdSync, 1, &eta_h, &[alpha])?;
    let radius = grid.radius.clone();
    let violations = eta_h.iter().zip(&radius).filter(|(_, r)| !is_stable(**r)).map(|(e, _)| *e).collect();
    let max_jump = radius.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(BoundaryReport { alpha, eta_h, radius, violations, max_jump })
}
