//! Point-source centers for geometric calibration.

use crate::error::{Error, Result};
use crate::image::Image2D;

/// Blob threshold as a fraction of the peak.
pub const CENTROID_THRESHOLD: f64 = 0.5;

/// Intensity-weighted centroid of the 4-connected blob around the brightest
/// pixel, keeping pixels at or above `threshold` times the peak. Returns
/// `[x, y]` in pixels.
pub fn weighted_centroid(img: &Image2D, threshold: f64) -> Result<[f64; 2]> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Parameter(format!("threshold must be in (0, 1], got {threshold}")));
    }
    let (w, h) = img.dims();
    let (peak_idx, &peak) = img
        .data()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Dimensions("empty image".into()))?;
    if !(peak > 0.0) {
        return Err(Error::Domain("image has no positive peak".into()));
    }
    let cut = threshold * peak;
    let mut seen = vec![false; w * h];
    let mut stack = vec![peak_idx];
    seen[peak_idx] = true;
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        let v = img.data()[i];
        sw += v;
        sx += v * x as f64;
        sy += v * y as f64;
        let mut push = |j: usize| {
            if !seen[j] && img.data()[j] >= cut {
                seen[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            push(i - 1);
        }
        if x + 1 < w {
            push(i + 1);
        }
        if y > 0 {
            push(i - w);
        }
        if y + 1 < h {
            push(i + w);
        }
    }
    Ok([sx / sw, sy / sw])
}
