//! Error and working range as a function of the confidence threshold.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::dataset::Dataset;
use super::sweep::{estimate_cells, resolve_threshold, summarize, working_range, EstimatorSpec, Threshold, WorkingRange};

/// Sparsity targets 0, 0.1, ..., 0.9.
pub fn sparsity_grid() -> Vec<Threshold> {
    (0..10).map(|i| Threshold::Sparsity(i as f64 / 10.0)).collect()
}

/// One point of the sparsification curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsificationPoint {
    pub c_thre: f64,
    pub sparsity: f64,
    pub mae: f64,
    pub range: WorkingRange,
}

pub const CSV_HEADER: &str = "c_thre,sparsity,mae_m,range_lo_m,range_hi_m,range_len_m";

pub fn to_csv(points: &[SparsificationPoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{:.6e},{:.6},{:.6e},{:.6},{:.6},{:.6}",
            p.c_thre, p.sparsity, p.mae, p.range.z_lo, p.range.z_hi, p.range.length
        );
    }
    s
}

/// Estimates every cell once, then for each threshold reports the fraction
/// of discarded pixels, the MAE over survivors and the working range of the
/// filtered sweep. Thresholds must be increasing once resolved.
pub fn sparsification_study(ds: &Dataset, spec: &EstimatorSpec, thresholds: &[Threshold]) -> Result<Vec<SparsificationPoint>> {
    let cells = estimate_cells(ds, spec)?;
    let resolved = thresholds
        .iter()
        .map(|&t| resolve_threshold(&cells, t))
        .collect::<Result<Vec<f64>>>()?;
    if resolved.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("thresholds must be increasing".into()));
    }
    Ok(resolved
        .into_iter()
        .map(|c| {
            let sweep = summarize(ds, &cells, c, spec.kind.name());
            SparsificationPoint {
                c_thre: c,
                sparsity: sweep.sparsity,
                mae: sweep.overall_mae(),
                range: working_range(&sweep),
            }
        })
        .collect())
}
