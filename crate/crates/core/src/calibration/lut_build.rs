//! Data-driven ratio-to-depth table from a calibration sweep.

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::estimator::depth::{build_ratio_planes, median, windowed_confidence, EPS_DIV};
use crate::estimator::derivatives::{derivatives, DEFAULT_BACKGROUND_DIM};
use crate::estimator::lut::DepthLut;
use crate::optics::QuadCapture;

/// Fraction of lowest-confidence pixels per capture excluded from pooling.
pub const LUT_CONFIDENCE_FLOOR: f64 = 0.2;

/// A built table with per-bin sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LutBuild {
    pub lut: DepthLut,
    pub occupancy: Vec<usize>,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Pools (ratio, Z_true) over confident pixels of every capture, bins the
/// ratios over their [p1, p99] range and stores the per-bin median depth.
/// Empty interior bins are linearly interpolated; exterior ones take the
/// nearest occupied value.
pub fn build_lut(sweep: &[(QuadCapture, f64)], config: &OpticalConfig, window: usize, bins: usize) -> Result<LutBuild> {
    if bins < 2 {
        return Err(Error::Parameter(format!("a LUT needs at least 2 bins, got {bins}")));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (quad, z) in sweep {
        if quad.config.hash() != config.hash() {
            return Err(Error::ConfigMismatch(format!(
                "sweep capture has config {} but the LUT targets {}",
                quad.config.hash(),
                config.hash()
            )));
        }
        let deriv = derivatives(quad, Some(DEFAULT_BACKGROUND_DIM))?;
        let (num, den) = build_ratio_planes(&deriv, window)?;
        let conf = windowed_confidence(&deriv, window)?;
        let mut sorted = conf.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        let floor = percentile(&sorted, LUT_CONFIDENCE_FLOOR);
        for ((&nu, &de), &cf) in num.data().iter().zip(den.data()).zip(conf.data()) {
            let r = nu / de;
            if de >= EPS_DIV && cf > floor && r.is_finite() {
                pairs.push((r, *z));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::ZeroWidthRange("no confident pixels in the sweep".into()));
    }
    let mut ratios: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    ratios.sort_by(f64::total_cmp);
    let (r_min, r_max) = (percentile(&ratios, 0.01), percentile(&ratios, 0.99));
    let mut depths: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    depths.sort_by(f64::total_cmp);
    depths.dedup();
    if depths.len() < 2 || !(r_max > r_min) {
        return Err(Error::ZeroWidthRange(format!(
            "ratio range [{r_min}, {r_max}] over {} distinct depth(s)",
            depths.len()
        )));
    }
    let step = (r_max - r_min) / bins as f64;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (r, z) in pairs {
        if r >= r_min && r <= r_max {
            let b = (((r - r_min) / step) as usize).min(bins - 1);
            per_bin[b].push(z);
        }
    }
    let occupancy: Vec<usize> = per_bin.iter().map(Vec::len).collect();
    let known: Vec<(usize, f64)> = per_bin
        .iter_mut()
        .enumerate()
        .filter_map(|(b, v)| median(v).map(|m| (b, m)))
        .collect();
    let mut table = vec![0.0; bins];
    for (b, slot) in table.iter_mut().enumerate() {
        let k = known.partition_point(|&(kb, _)| kb < b);
        *slot = if k < known.len() && known[k].0 == b {
            known[k].1
        } else if k == 0 {
            known[0].1
        } else if k == known.len() {
            known[k - 1].1
        } else {
            let (b0, z0) = known[k - 1];
            let (b1, z1) = known[k];
            z0 + (z1 - z0) * (b - b0) as f64 / (b1 - b0) as f64
        };
    }
    Ok(LutBuild {
        lut: DepthLut::new(r_min, r_max, table, config.hash())?,
        occupancy,
    })
}
