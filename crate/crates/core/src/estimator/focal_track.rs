//! Focal Track baseline: depth from the ratio of the optical-power
//! derivative to the spatial Laplacian, assuming a Gaussian PSF.

use crate::error::Result;
use crate::estimator::depth::{check_window, DepthResult, EPS_DIV};
use crate::estimator::derivatives::finite_diff_rho;
use crate::filter::{box_sum, laplacian5};
use crate::image::Image2D;
use crate::optics::QuadCapture;

/// Windowed least squares for Z = b / (a − I_ρ/∇²Ī) with
/// a = μ²A²Z_s(Z_sρ − 1) and b = μ²A²Z_s², where μ² is the per-axis second
/// moment of the aperture profile (1/4 for a unit-radius pillbox). The
/// Laplacian is in sensor units. Confidence is Σ_W (∇²Ī)².
pub fn focal_track_depth(quad: &QuadCapture, window: usize, second_moment: f64) -> Result<DepthResult> {
    check_window(window)?;
    let c = &quad.config;
    let i_rho = finite_diff_rho(quad)?;
    let mean = quad.rho_plus.zip_map(&quad.rho_minus, |p, m| 0.5 * (p + m))?;
    let inv_pitch2 = 1.0 / (c.pixel_pitch * c.pixel_pitch);
    let lap = laplacian5(&mean).map(|v| v * inv_pitch2);
    let a2 = second_moment * c.aperture * c.aperture;
    let a = a2 * c.sensor_dist * (c.sensor_dist * c.rho - 1.0);
    let b = a2 * c.sensor_dist * c.sensor_dist;
    let ll = lap.map(|l| l * l);
    let lr = lap.zip_map(&i_rho, |l, r| l * (a * l - r))?;
    let (ll, lr) = if window == 1 {
        (ll, lr)
    } else {
        (box_sum(&ll, window)?, box_sum(&lr, window)?)
    };
    let (w, h) = quad.dims();
    let mut depth = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (&s, &t) in ll.data().iter().zip(lr.data()) {
        let z = b * s / t;
        let ok = s > 0.0 && t.abs() >= EPS_DIV * s.max(1.0) && z.is_finite();
        depth.push(if ok { z } else { 0.0 });
        valid.push(ok);
    }
    DepthResult::new(Image2D::new(w, h, depth)?, ll, valid)
}
