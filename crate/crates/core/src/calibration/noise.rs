//! Photon-per-brightness-level calibration from repeated frames.

use crate::error::{Error, Result};
use crate::image::Image2D;

/// Mean brightness at or below which a pixel is excluded.
pub const MIN_MEAN: f64 = 1e-9;
/// Total normalized residual below which frames count as noise-free.
pub const NOISE_FREE_EPS: f64 = 1e-12;
/// Half-width of the residual histogram in units of √Ī.
const HIST_RANGE: f64 = 5.0;
const HIST_BINS: usize = 50;

/// Calibrated λ, or a sentinel for frames without measurable noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseEstimate {
    Lambda(f64),
    NoiseFree,
}

impl NoiseEstimate {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            NoiseEstimate::Lambda(l) => Some(*l),
            NoiseEstimate::NoiseFree => None,
        }
    }
}

/// Result of [`calibrate_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCalibration {
    pub estimate: NoiseEstimate,
    /// (bin center, count) of normalized residuals (I − Ī)/√Ī.
    pub residual_histogram: Vec<(f64, usize)>,
    pub pixels_used: usize,
    pub frames: usize,
}

/// Maximum-likelihood λ under noise variance Ī/λ:
/// λ̂ = N / Σ (I_i − Ī)²/Ī over pixels with Ī > [`MIN_MEAN`].
///
/// Per-pixel terms are summed in sorted order, so the estimate is exactly
/// invariant to any pixel permutation shared by all frames.
pub fn calibrate_noise(frames: &[Image2D]) -> Result<NoiseCalibration> {
    if frames.len() < 2 {
        return Err(Error::Insufficient {
            what: "noise calibration frames".into(),
            expected: 2,
            found: frames.len(),
        });
    }
    for f in &frames[1..] {
        frames[0].check_same_dims(f, "noise frame")?;
    }
    let nf = frames.len() as f64;
    let mut terms = Vec::with_capacity(frames[0].len());
    let mut hist = vec![0usize; HIST_BINS];
    let bin_w = 2.0 * HIST_RANGE / HIST_BINS as f64;
    for i in 0..frames[0].len() {
        let mean = frames.iter().map(|f| f.data()[i]).sum::<f64>() / nf;
        if mean <= MIN_MEAN {
            continue;
        }
        let sd = mean.sqrt();
        let mut t = 0.0;
        for f in frames {
            let r = f.data()[i] - mean;
            t += r * r;
            let z = r / sd;
            if z.abs() < HIST_RANGE {
                hist[(((z + HIST_RANGE) / bin_w) as usize).min(HIST_BINS - 1)] += 1;
            }
        }
        terms.push(t / mean);
    }
    if terms.is_empty() {
        return Err(Error::Domain("no pixel has a positive mean brightness".into()));
    }
    terms.sort_by(f64::total_cmp);
    let total: f64 = terms.iter().sum();
    let n = terms.len() as f64 * nf;
    let estimate = if total < NOISE_FREE_EPS {
        NoiseEstimate::NoiseFree
    } else {
        NoiseEstimate::Lambda(n / total)
    };
    let residual_histogram = hist
        .into_iter()
        .enumerate()
        .map(|(b, c)| (-HIST_RANGE + (b as f64 + 0.5) * bin_w, c))
        .collect();
    Ok(NoiseCalibration {
        estimate,
        residual_histogram,
        pixels_used: terms.len(),
        frames: frames.len(),
    })
}
