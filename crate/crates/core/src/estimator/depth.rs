//! Closed-form and windowed least-squares depth with confidence.

use crate::error::{Error, Result};
use crate::estimator::derivatives::DerivativePair;
use crate::filter::box_sum;
use crate::image::Image2D;

/// Guard on divisors; smaller magnitudes mark a pixel invalid.
pub const EPS_DIV: f64 = 1e-12;

/// Default aggregation window.
pub const DEFAULT_WINDOW: usize = 5;

/// Depth map, confidence map and validity mask of equal dimensions.
/// Invalid pixels carry depth 0 and are excluded from every statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult {
    pub depth: Image2D,
    pub confidence: Image2D,
    pub valid: Vec<bool>,
}

impl DepthResult {
    pub fn new(depth: Image2D, confidence: Image2D, valid: Vec<bool>) -> Result<Self> {
        depth.check_same_dims(&confidence, "depth vs confidence")?;
        if valid.len() != depth.len() {
            return Err(Error::Dimensions("validity mask length".into()));
        }
        if confidence.min() < 0.0 {
            return Err(Error::Numerical("negative confidence".into()));
        }
        Ok(DepthResult { depth, confidence, valid })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    /// Fraction of invalid pixels.
    pub fn sparsity(&self) -> f64 {
        if self.valid.is_empty() {
            return 1.0;
        }
        self.valid.iter().filter(|v| !**v).count() as f64 / self.valid.len() as f64
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Depths of valid pixels, in raster order.
    pub fn valid_depths(&self) -> Vec<f64> {
        self.depth
            .data()
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|(d, _)| *d)
            .collect()
    }

    /// Median depth over valid pixels.
    pub fn median_depth(&self) -> Option<f64> {
        median(&mut self.valid_depths())
    }

    /// Copy restricted to the interior, dropping a `border`-pixel frame.
    pub fn crop_border(&self, border: usize) -> Result<DepthResult> {
        let (w, h) = self.dims();
        if 2 * border >= w || 2 * border >= h {
            return Err(Error::Dimensions("border larger than the image".into()));
        }
        let (cw, ch) = (w - 2 * border, h - 2 * border);
        let mut valid = Vec::with_capacity(cw * ch);
        for y in border..h - border {
            valid.extend_from_slice(&self.valid[y * w + border..y * w + border + cw]);
        }
        DepthResult::new(
            self.depth.crop(border, border, cw, ch)?,
            self.confidence.crop(border, border, cw, ch)?,
            valid,
        )
    }
}

/// Median of a slice (reordered in place); `None` when empty.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Z = Z_s / (Z_sρ − 1 − A·Z_s·I_A/I_ρ) per pixel; confidence I_ρ².
pub fn depth_per_pixel(deriv: &DerivativePair) -> DepthResult {
    let c = &deriv.config;
    let zs = c.sensor_dist;
    let base = zs * c.rho - 1.0;
    let azs = c.aperture * zs;
    let n = deriv.d_rho.len();
    let mut depth = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for (&ir, &ia) in deriv.d_rho.data().iter().zip(deriv.d_a.data()) {
        let mut z = 0.0;
        let mut ok = false;
        if ir.abs() >= EPS_DIV {
            let den = base - azs * (ia / ir);
            if den.abs() >= EPS_DIV {
                let v = zs / den;
                if v.is_finite() {
                    z = v;
                    ok = true;
                }
            }
        }
        depth.push(z);
        valid.push(ok);
    }
    let (w, h) = deriv.dims();
    DepthResult {
        depth: Image2D::from_vec_unchecked(w, h, depth),
        confidence: deriv.d_rho.map(|v| v * v),
        valid,
    }
}

/// Ratio planes num = Σ_W I_ρ·d and den = Σ_W d² with
/// d = (Z_sρ − 1)·I_ρ − A·Z_s·I_A; depth is Z_s·num/den.
pub fn build_ratio_planes(deriv: &DerivativePair, window: usize) -> Result<(Image2D, Image2D)> {
    check_window(window)?;
    let c = &deriv.config;
    let base = c.sensor_dist * c.rho - 1.0;
    let azs = c.aperture * c.sensor_dist;
    let d = deriv.d_rho.zip_map(&deriv.d_a, |ir, ia| base * ir - azs * ia)?;
    let p = deriv.d_rho.zip_map(&d, |ir, dd| ir * dd)?;
    let q = d.map(|dd| dd * dd);
    if window == 1 {
        return Ok((p, q));
    }
    Ok((box_sum(&p, window)?, box_sum(&q, window)?))
}

/// Windowed confidence Σ_W I_ρ².
pub fn windowed_confidence(deriv: &DerivativePair, window: usize) -> Result<Image2D> {
    check_window(window)?;
    let e = deriv.d_rho.map(|v| v * v);
    if window == 1 {
        return Ok(e);
    }
    box_sum(&e, window)
}

pub(crate) fn check_window(window: usize) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::Parameter(format!("window must be odd and positive, got {window}")));
    }
    Ok(())
}

/// Least-squares depth over a `window`x`window` neighborhood. A window of 1
/// is exactly the per-pixel closed form.
pub fn depth_windowed(deriv: &DerivativePair, window: usize) -> Result<DepthResult> {
    check_window(window)?;
    if window == 1 {
        return Ok(depth_per_pixel(deriv));
    }
    let (num, den) = build_ratio_planes(deriv, window)?;
    let conf = windowed_confidence(deriv, window)?;
    let zs = deriv.config.sensor_dist;
    let mut depth = Vec::with_capacity(num.len());
    let mut valid = Vec::with_capacity(num.len());
    for ((&nu, &de), &cf) in num.data().iter().zip(den.data()).zip(conf.data()) {
        let z = zs * nu / de;
        let ok = de >= EPS_DIV && cf > 0.0 && z.is_finite();
        depth.push(if ok { z } else { 0.0 });
        valid.push(ok);
    }
    let (w, h) = deriv.dims();
    Ok(DepthResult {
        depth: Image2D::from_vec_unchecked(w, h, depth),
        confidence: conf,
        valid,
    })
}

/// Marks pixels with confidence ≤ `c_thre` invalid.
pub fn confidence_threshold(result: &DepthResult, c_thre: f64) -> Result<DepthResult> {
    if !(c_thre >= 0.0) {
        return Err(Error::Parameter(format!("confidence threshold must be nonnegative, got {c_thre}")));
    }
    let valid: Vec<bool> = result
        .valid
        .iter()
        .zip(result.confidence.data())
        .map(|(&v, &c)| v && c > c_thre)
        .collect();
    let (w, h) = result.dims();
    let depth = result
        .depth
        .data()
        .iter()
        .zip(&valid)
        .map(|(&d, &v)| if v { d } else { 0.0 })
        .collect();
    Ok(DepthResult {
        depth: Image2D::from_vec_unchecked(w, h, depth),
        confidence: result.confidence.clone(),
        valid,
    })
}

/// Threshold at which a fraction `sparsity` of pixels falls at or below.
pub fn threshold_for_sparsity(result: &DepthResult, sparsity: f64) -> f64 {
    let mut c: Vec<f64> = result.confidence.data().to_vec();
    if c.is_empty() || sparsity <= 0.0 {
        return 0.0;
    }
    c.sort_by(f64::total_cmp);
    let k = ((sparsity.min(1.0) * c.len() as f64).ceil() as usize).clamp(1, c.len());
    c[k - 1]
}
