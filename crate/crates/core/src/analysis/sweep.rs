//! MAE-versus-depth sweeps and working range.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    depth_windowed, derivatives, focal_track_depth, infer_lut, DepthLut, DepthResult, KernelOptions,
    DEFAULT_BINS, DEFAULT_WINDOW,
};
use crate::optics::{ApertureProfile, QuadCapture};

use super::dataset::{Cell, Dataset};

/// Depth span of the default closed-form table used by the LUT estimator.
pub const DEFAULT_LUT_DEPTHS: (f64, f64) = (0.1, 10.0);
/// Relative-error bound defining the working range.
pub const WORKING_RANGE_REL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    CodWindowed,
    CodLut,
    FocalTrack,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::CodWindowed => "cod_windowed",
            EstimatorKind::CodLut => "cod_lut",
            EstimatorKind::FocalTrack => "focal_track",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cod_windowed" | "cod-windowed" => Ok(EstimatorKind::CodWindowed),
            "cod_lut" | "cod-lut" => Ok(EstimatorKind::CodLut),
            "focal_track" | "focal-track" => Ok(EstimatorKind::FocalTrack),
            _ => Err(Error::Parse(format!("unknown estimator '{s}'"))),
        }
    }
}

/// Estimator and its settings.
#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub window: usize,
    /// Background-removal box size for the optical estimators. Off by
    /// default: simulated captures have no brightness-registration error,
    /// and near the camera the blur outgrows the box and removal would
    /// subtract signal.
    pub background_dim: Option<usize>,
    /// Table for [`EstimatorKind::CodLut`]; `None` uses the closed-form
    /// table over [`DEFAULT_LUT_DEPTHS`].
    pub lut: Option<DepthLut>,
    /// Minimum border excluded from evaluation.
    pub eval_border: usize,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec {
            kind,
            window: DEFAULT_WINDOW,
            background_dim: None,
            lut: None,
            eval_border: 0,
        }
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    /// Unthresholded estimate for one capture.
    pub fn run(&self, quad: &QuadCapture, profile: &ApertureProfile) -> Result<DepthResult> {
        match self.kind {
            EstimatorKind::CodWindowed => depth_windowed(&derivatives(quad, self.background_dim)?, self.window),
            EstimatorKind::CodLut => {
                let options = KernelOptions {
                    background_dim: self.background_dim,
                    window: self.window,
                    c_thre: f64::NEG_INFINITY,
                };
                match &self.lut {
                    Some(lut) => infer_lut(quad, lut, &options, None),
                    None => {
                        let zs = quad.config.sensor_dist;
                        let (lo, hi) = DEFAULT_LUT_DEPTHS;
                        let lut = DepthLut::from_closed_form(&quad.config, lo / zs, hi / zs, DEFAULT_BINS)?;
                        infer_lut(quad, &lut, &options, None)
                    }
                }
            }
            EstimatorKind::FocalTrack => focal_track_depth(quad, self.window, profile.second_moment()),
        }
    }

    /// Border excluded from evaluation.
    pub fn border(&self) -> usize {
        (self.window / 2 + 1).max(self.eval_border)
    }
}

/// How pixels are selected for error statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Keep valid pixels with confidence above this value.
    Confidence(f64),
    /// Keep the most confident pixels so that this fraction of all pixels
    /// is discarded (or every valid pixel, if guards discard more).
    Sparsity(f64),
}

/// Valid estimates of one cell as (confidence, depth), plus its pixel count.
#[derive(Debug, Clone)]
pub struct CellEstimate {
    pub cell: Cell,
    pub pixels: usize,
    pub samples: Vec<(f64, f64)>,
}

/// Runs the estimator on every cell. Cells are evaluated in parallel and
/// returned in dataset order.
pub fn estimate_cells(ds: &Dataset, spec: &EstimatorSpec) -> Result<Vec<CellEstimate>> {
    estimate_cells_with(ds, spec, &ds.config)
}

/// [`estimate_cells`] with captures taken under `config`.
pub fn estimate_cells_with(
    ds: &Dataset,
    spec: &EstimatorSpec,
    config: &crate::config::OpticalConfig,
) -> Result<Vec<CellEstimate>> {
    ds.validate()?;
    ds.cells()
        .par_iter()
        .map(|&cell| {
            let quad = ds.capture_with(config, cell)?;
            let r = spec.run(&quad, &ds.profile)?.crop_border(spec.border())?;
            let samples = r
                .valid
                .iter()
                .zip(r.confidence.data().iter().zip(r.depth.data()))
                .filter(|(v, _)| **v)
                .map(|(_, (&c, &z))| (c, z))
                .collect();
            Ok(CellEstimate {
                cell,
                pixels: r.valid.len(),
                samples,
            })
        })
        .collect()
}

/// Confidence threshold realizing `threshold` over all cells.
pub fn resolve_threshold(cells: &[CellEstimate], threshold: Threshold) -> Result<f64> {
    match threshold {
        Threshold::Confidence(c) => Ok(c),
        Threshold::Sparsity(s) => {
            if !(0.0..1.0).contains(&s) {
                return Err(Error::Parameter(format!("sparsity must be in [0, 1), got {s}")));
            }
            let total: usize = cells.iter().map(|c| c.pixels).sum();
            let keep = ((1.0 - s) * total as f64).round() as usize;
            let mut conf: Vec<f64> = cells.iter().flat_map(|c| c.samples.iter().map(|p| p.0)).collect();
            if keep >= conf.len() {
                return Ok(f64::NEG_INFINITY);
            }
            conf.sort_by(|a, b| b.total_cmp(a));
            Ok(conf[keep])
        }
    }
}

/// Per-depth error statistics of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthSweepResult {
    pub estimator: String,
    pub depths: Vec<f64>,
    /// Mean |Z − Z_true| over kept pixels; NaN when none is kept.
    pub mae: Vec<f64>,
    /// Mean |Z − Z̄| over kept pixels.
    pub mean_dev: Vec<f64>,
    pub kept: Vec<usize>,
    pub depth_sparsity: Vec<f64>,
    /// Fraction of all evaluated pixels discarded.
    pub sparsity: f64,
    pub c_thre: f64,
}

impl DepthSweepResult {
    pub const CSV_HEADER: &'static str = "estimator,depth_m,mae_m,mean_dev_m,kept_pixels,sparsity";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for i in 0..self.depths.len() {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6e},{:.6e},{},{:.6}",
                self.estimator, self.depths[i], self.mae[i], self.mean_dev[i], self.kept[i], self.depth_sparsity[i]
            );
        }
        s
    }

    /// MAE pooled over every kept pixel.
    pub fn overall_mae(&self) -> f64 {
        let n: usize = self.kept.iter().sum();
        if n == 0 {
            return f64::NAN;
        }
        self.mae
            .iter()
            .zip(&self.kept)
            .filter(|(_, &k)| k > 0)
            .map(|(m, &k)| m * k as f64)
            .sum::<f64>()
            / n as f64
    }
}

/// Error statistics of `cells` keeping valid pixels with confidence > `c_thre`.
pub fn summarize(ds: &Dataset, cells: &[CellEstimate], c_thre: f64, estimator: &str) -> DepthSweepResult {
    let nd = ds.depths.len();
    let mut kept_z: Vec<Vec<f64>> = vec![Vec::new(); nd];
    let mut pixels = vec![0usize; nd];
    for c in cells {
        pixels[c.cell.depth] += c.pixels;
        kept_z[c.cell.depth].extend(c.samples.iter().filter(|p| p.0 > c_thre).map(|p| p.1));
    }
    let mut mae = Vec::with_capacity(nd);
    let mut mean_dev = Vec::with_capacity(nd);
    let mut kept = Vec::with_capacity(nd);
    let mut depth_sparsity = Vec::with_capacity(nd);
    for (d, zs) in kept_z.iter().enumerate() {
        let truth = ds.depths[d];
        let n = zs.len();
        kept.push(n);
        depth_sparsity.push(if pixels[d] > 0 { 1.0 - n as f64 / pixels[d] as f64 } else { 1.0 });
        if n == 0 {
            mae.push(f64::NAN);
            mean_dev.push(f64::NAN);
            continue;
        }
        let mean = zs.iter().sum::<f64>() / n as f64;
        mae.push(zs.iter().map(|z| (z - truth).abs()).sum::<f64>() / n as f64);
        mean_dev.push(zs.iter().map(|z| (z - mean).abs()).sum::<f64>() / n as f64);
    }
    let total: usize = pixels.iter().sum();
    let kept_total: usize = kept.iter().sum();
    DepthSweepResult {
        estimator: estimator.to_string(),
        depths: ds.depths.clone(),
        mae,
        mean_dev,
        kept,
        depth_sparsity,
        sparsity: if total > 0 { 1.0 - kept_total as f64 / total as f64 } else { 1.0 },
        c_thre,
    }
}

/// Simulates every cell, runs the estimator and reports per-depth errors.
pub fn mae_sweep(ds: &Dataset, spec: &EstimatorSpec, threshold: Threshold) -> Result<DepthSweepResult> {
    let cells = estimate_cells(ds, spec)?;
    let c = resolve_threshold(&cells, threshold)?;
    Ok(summarize(ds, &cells, c, spec.kind.name()))
}

/// Contiguous depth interval, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingRange {
    pub z_lo: f64,
    pub z_hi: f64,
    pub length: f64,
}

impl WorkingRange {
    pub const EMPTY: WorkingRange = WorkingRange {
        z_lo: 0.0,
        z_hi: 0.0,
        length: 0.0,
    };

    pub fn is_empty(&self) -> bool {
        self.length == 0.0 && self.z_lo == 0.0
    }
}

/// Longest run of sampled depths with MAE < 0.1·Z, as the interval between
/// its first and last such depth. Depths without any kept pixel (NaN MAE)
/// carry no estimate: they neither break a run nor end one. Ties keep the
/// nearer run.
pub fn working_range(sweep: &DepthSweepResult) -> WorkingRange {
    let mut best = WorkingRange::EMPTY;
    let mut run: Option<(usize, usize)> = None;
    let n = sweep.depths.len();
    for i in 0..=n {
        let m = if i < n { sweep.mae[i] } else { f64::INFINITY };
        if m.is_nan() {
            continue;
        }
        if i < n && m < WORKING_RANGE_REL * sweep.depths[i] {
            run = Some(run.map_or((i, i), |(s, _)| (s, i)));
        } else if let Some((s, e)) = run.take() {
            let r = WorkingRange {
                z_lo: sweep.depths[s],
                z_hi: sweep.depths[e],
                length: sweep.depths[e] - sweep.depths[s],
            };
            if best.is_empty() || r.length > best.length {
                best = r;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sweep_of(depths: Vec<f64>, mae: Vec<f64>) -> DepthSweepResult {
        let n = depths.len();
        DepthSweepResult {
            estimator: "t".into(),
            depths,
            mae,
            mean_dev: vec![0.0; n],
            kept: vec![1; n],
            depth_sparsity: vec![0.0; n],
            sparsity: 0.0,
            c_thre: 0.0,
        }
    }

    #[test]
    fn range_examples() {
        let d = vec![0.5, 1.0, 1.5, 2.0];
        let full = working_range(&sweep_of(d.clone(), vec![0.0; 4]));
        assert_eq!((full.z_lo, full.z_hi), (0.5, 2.0));
        let none = working_range(&sweep_of(d.clone(), d.iter().map(|z| 0.2 * z).collect()));
        assert!(none.is_empty());
        let mid = working_range(&sweep_of(d.clone(), vec![1.0, 0.0, 0.0, 1.0]));
        assert_eq!((mid.z_lo, mid.z_hi, mid.length), (1.0, 1.5, 0.5));
        let gap = working_range(&sweep_of(d.clone(), vec![0.0, f64::NAN, 0.0, 1.0]));
        assert_eq!((gap.z_lo, gap.z_hi), (0.5, 1.5));
        let edge = working_range(&sweep_of(d, vec![f64::NAN, 0.0, 0.0, f64::NAN]));
        assert_eq!((edge.z_lo, edge.z_hi), (1.0, 1.5));
    }

    proptest! {
        #[test]
        fn range_monotone_under_improvement(
            mae in proptest::collection::vec(0.0f64..0.3, 8),
            shrink in proptest::collection::vec(0.0f64..=1.0, 8),
        ) {
            let depths: Vec<f64> = (0..8).map(|i| 0.4 + 0.3 * i as f64).collect();
            let rel: Vec<f64> = mae.iter().zip(&depths).map(|(m, z)| m * z).collect();
            let better: Vec<f64> = rel.iter().zip(&shrink).map(|(m, s)| m * s).collect();
            let a = working_range(&sweep_of(depths.clone(), rel));
            let b = working_range(&sweep_of(depths, better));
            prop_assert!(b.length >= a.length);
        }
    }
}
