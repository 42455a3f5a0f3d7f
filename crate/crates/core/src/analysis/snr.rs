//! Per-pixel SNR of the optical derivatives and of the Laplacian.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::estimator::{finite_diff_a, finite_diff_rho, median};
use crate::filter::laplacian5;
use crate::image::Image2D;
use crate::optics::{add_noise, capture_images, form_image, QuadCapture};

use super::dataset::{Cell, Dataset};

/// Reference derivatives use steps this many times smaller than the
/// operating ones.
pub const REFERENCE_STEP_DIVISOR: f64 = 16.0;

/// Per-depth SNR. Each entry is the median over pixels, textures and
/// trials of |x*/(x̂ − x*)|.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    pub depths: Vec<f64>,
    pub snr_rho: Vec<f64>,
    pub snr_a: Vec<f64>,
    pub snr_lap: Vec<f64>,
    /// Worst relative change of the reference I_ρ between steps δ/8 and
    /// δ/16 at each depth; small values mean the reference has converged.
    pub reference_change: Vec<f64>,
}

impl SnrCurve {
    pub const CSV_HEADER: &'static str = "depth_m,snr_rho,snr_a,snr_lap,reference_change";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for i in 0..self.depths.len() {
            let _ = writeln!(
                s,
                "{:.6},{:.6e},{:.6e},{:.6e},{:.3e}",
                self.depths[i], self.snr_rho[i], self.snr_a[i], self.snr_lap[i], self.reference_change[i]
            );
        }
        s
    }
}

fn derivative_pair(ds: &Dataset, cell: Cell, divisor: f64) -> Result<(Image2D, Image2D)> {
    let c = &ds.config;
    let (dr, da) = (c.delta_rho / divisor, c.delta_a / divisor);
    let [rp, rm, ap, am] = capture_images(
        &ds.textures[cell.texture],
        ds.depths[cell.depth],
        &ds.profile,
        c,
        dr,
        da,
        None,
        ds.dims,
    )?;
    let q = QuadCapture::new(rp, rm, ap, am, c.with_steps(dr, da)?)?;
    Ok((finite_diff_rho(&q)?, finite_diff_a(&q, None)?))
}

fn snr_values(truth: &Image2D, est: &Image2D, border: usize, out: &mut Vec<f64>) {
    let (w, h) = truth.dims();
    for y in border..h - border {
        for x in border..w - border {
            let t = truth.get(x, y);
            out.push((t / (est.get(x, y) - t)).abs());
        }
    }
}

struct CellSnr {
    rho: Vec<f64>,
    a: Vec<f64>,
    lap: Vec<f64>,
    change: f64,
}

fn cell_snr(ds: &Dataset, cell: Cell) -> Result<CellSnr> {
    let (tr, ta) = derivative_pair(ds, cell, REFERENCE_STEP_DIVISOR)?;
    let (cr, _) = derivative_pair(ds, cell, REFERENCE_STEP_DIVISOR / 2.0)?;
    let scale = tr.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let change = if scale > 0.0 {
        tr.data().iter().zip(cr.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
    } else {
        0.0
    };
    let quad = ds.capture(cell)?;
    let (er, ea) = (finite_diff_rho(&quad)?, finite_diff_a(&quad, None)?);
    let clean = form_image(
        &ds.textures[cell.texture],
        ds.depths[cell.depth],
        &ds.profile,
        &ds.config,
        None,
        None,
        ds.dims,
    )?;
    let noisy = match ds.noise_for(cell)? {
        Some(n) => add_noise(&clean, &n.child(&[4]))?,
        None => clean.clone(),
    };
    let (lt, le) = (laplacian5(&clean), laplacian5(&noisy));
    let mut out = CellSnr {
        rho: Vec::new(),
        a: Vec::new(),
        lap: Vec::new(),
        change,
    };
    snr_values(&tr, &er, 1, &mut out.rho);
    snr_values(&ta, &ea, 1, &mut out.a);
    snr_values(&lt, &le, 1, &mut out.lap);
    Ok(out)
}

/// SNR of I_ρ, I_A and ∇²I per depth. Reference derivatives are noiseless
/// finite differences at 1/16 of the operating steps; the estimates use
/// the dataset's noisy captures at the operating steps.
///
/// The per-pixel ratio has a Gaussian denominator and so no finite mean;
/// the median is reported instead.
pub fn snr_study(ds: &Dataset) -> Result<SnrCurve> {
    ds.validate()?;
    let cells = ds.cells();
    let per_cell: Vec<CellSnr> = cells.par_iter().map(|&c| cell_snr(ds, c)).collect::<Result<_>>()?;
    let nd = ds.depths.len();
    let mut curve = SnrCurve {
        depths: ds.depths.clone(),
        snr_rho: Vec::with_capacity(nd),
        snr_a: Vec::with_capacity(nd),
        snr_lap: Vec::with_capacity(nd),
        reference_change: Vec::with_capacity(nd),
    };
    for d in 0..nd {
        let (mut r, mut a, mut l, mut ch) = (Vec::new(), Vec::new(), Vec::new(), 0.0f64);
        for (cell, s) in cells.iter().zip(&per_cell) {
            if cell.depth == d {
                r.extend_from_slice(&s.rho);
                a.extend_from_slice(&s.a);
                l.extend_from_slice(&s.lap);
                ch = ch.max(s.change);
            }
        }
        curve.snr_rho.push(median(&mut r).unwrap_or(0.0));
        curve.snr_a.push(median(&mut a).unwrap_or(0.0));
        curve.snr_lap.push(median(&mut l).unwrap_or(0.0));
        curve.reference_change.push(ch);
    }
    Ok(curve)
}
