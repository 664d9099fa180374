//! Sweep records, the convergence verdict and the CSV/report files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{LabError, Result};

/// One row of the `h` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub h: f64,
    /// Best objective of `G_h^I` found.
    pub inf_gh: f64,
    /// `inf_gh − min G̃^I`.
    pub gap: f64,
    /// `h⁻¹ ‖(y − R x − c)₃‖_{L²}`.
    pub t_j: f64,
    pub phi_rj: f64,
    pub det_residual: f64,
    pub active_nodes: usize,
    pub r_axis: Vector3<f64>,
    pub r_angle: f64,
    pub c: Vector3<f64>,
    /// `‖u_j‖_{H¹}` of the rescaled displacement.
    pub u_h1: f64,
    /// `‖u_j − ū‖_{L²}` against the limit minimizer.
    pub u_distance: f64,
    pub feasible: bool,
}

pub const CSV_HEADER: &str = "h,inf_Gh,gap,t_j,phi_Rj,det_residual,active_nodes,R_axis,R_angle,c1,c2,c3";

/// The sweep as CSV, rows sorted by decreasing `h`. The rotation axis is
/// written as three space-separated components in one field.
pub fn format_csv(records: &[ConvergenceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(LabError::InvalidInput("no records to write".into()));
    }
    let mut rows: Vec<&ConvergenceRecord> = records.iter().collect();
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e} {:.12e} {:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.h,
            r.inf_gh,
            r.gap,
            r.t_j,
            r.phi_rj,
            r.det_residual,
            r.active_nodes,
            r.r_axis.x,
            r.r_axis.y,
            r.r_axis.z,
            r.r_angle,
            r.c.x,
            r.c.y,
            r.c.z
        );
    }
    Ok(out)
}

/// Outcome of the trend-plus-threshold test on the gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceVerdict {
    /// `max(gap, 0)` over the last (up to) three `h` values, largest `h` first.
    pub tail: Vec<f64>,
    pub nonincreasing: bool,
    pub final_gap: f64,
    pub tolerance: f64,
}

impl ConvergenceVerdict {
    pub fn passed(&self) -> bool {
        self.nonincreasing && self.final_gap <= self.tolerance
    }
}

/// Default final-gap threshold `5e-3 (1 + |min G̃^I|)`.
pub fn default_tolerance(min_gtilde: f64) -> f64 {
    5e-3 * (1.0 + min_gtilde.abs())
}

/// Positive part of the gap nonincreasing over the final three `h` values and
/// final gap at most `tolerance`. Depends only on the records.
pub fn convergence_verdict(records: &[ConvergenceRecord], tolerance: f64) -> Result<ConvergenceVerdict> {
    let mut rows: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.gap.is_finite()).collect();
    if rows.is_empty() {
        return Err(LabError::InvalidInput("no finite gaps to judge".into()));
    }
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    let start = rows.len().saturating_sub(3);
    let tail: Vec<f64> = rows[start..].iter().map(|r| r.gap.max(0.0)).collect();
    let nonincreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let final_gap = *tail.last().expect("nonempty");
    Ok(ConvergenceVerdict { tail, nonincreasing, final_gap, tolerance })
}

/// Power-law fit `slack(h) = C h^p` of the deficits `max(min G̃^I − inf_Gh, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackFit {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Least-squares fit in log-log coordinates over the positive deficits;
/// `None` when fewer than two are positive.
pub fn fit_slack(records: &[ConvergenceRecord], min_gtilde: f64) -> Option<SlackFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.h, min_gtilde - r.inf_gh))
        .filter(|(_, d)| *d > 0.0 && d.is_finite())
        .map(|(h, d)| (h.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Some(SlackFit { coefficient: (my - exponent * mx).exp(), exponent })
}

/// Writes `sweep.csv` and `report.txt` into `dir`, creating it if needed.
pub fn emit_outputs(records: &[ConvergenceRecord], report: &str, dir: &Path) -> Result<()> {
    let csv = format_csv(records)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("sweep.csv"), csv)?;
    std::fs::write(dir.join("report.txt"), report)?;
    Ok(())
}
