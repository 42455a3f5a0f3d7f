//! Defocus scale and rasterized point spread functions.

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::optics::aperture::ApertureProfile;

/// Kernels with |σ| below this many pixels collapse to a delta.
pub const DELTA_THRESHOLD_PX: f64 = 0.25;

/// Signed defocus scale σ = A·((ρ − 1/Z)·Z_s − 1) in meters, for explicit
/// optical power and aperture radius.
pub fn blur_scale_at(z: f64, rho: f64, aperture: f64, sensor_dist: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Domain(format!("depth must be positive, got {z}")));
    }
    Ok(aperture * ((rho - 1.0 / z) * sensor_dist - 1.0))
}

/// Signed defocus scale at the configuration's nominal ρ and A.
pub fn blur_scale(z: f64, config: &OpticalConfig) -> Result<f64> {
    blur_scale_at(z, config.rho, config.aperture, config.sensor_dist)
}

/// A rasterized, unit-sum PSF.
#[derive(Debug, Clone)]
pub struct PsfKernel {
    pub kernel: Image2D,
    /// Signed defocus scale in pixels.
    pub scale_px: f64,
}

impl PsfKernel {
    /// Half-width of the (square) kernel in pixels.
    pub fn radius(&self) -> usize {
        self.kernel.width() / 2
    }
}

/// Sub-pixel sampling density that keeps the rasterized kernel smooth in σ:
/// at least 4, and finer for small features so sharp profile edges are
/// resolved well below a pixel. `scale_px` is the size of the finest
/// feature, e.g. σ_px times the profile's feature radius.
pub fn auto_supersample(scale_px: f64) -> usize {
    let s = scale_px.abs().max(DELTA_THRESHOLD_PX);
    ((32.0 / s).ceil() as usize).clamp(4, 128)
}

/// Rasterizes κ(x/σ_px, y/σ_px) with `supersample`² samples per pixel and
/// normalizes to unit sum. Negative σ yields the point-reflected kernel.
pub fn render_psf(profile: &ApertureProfile, sigma: f64, pitch: f64, supersample: usize) -> Result<PsfKernel> {
    if supersample == 0 {
        return Err(Error::Parameter("supersample must be at least 1".into()));
    }
    if !(pitch > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter("pitch must be positive and sigma finite".into()));
    }
    let s = sigma / pitch;
    if s.abs() < DELTA_THRESHOLD_PX {
        return Ok(PsfKernel {
            kernel: Image2D::filled(1, 1, 1.0),
            scale_px: s,
        });
    }
    let r = (profile.support_radius() * s.abs()).ceil() as usize;
    let dim = 2 * r + 1;
    let ss = supersample as f64;
    let mut data = vec![0.0; dim * dim];
    for j in 0..dim {
        for i in 0..dim {
            let mut acc = 0.0;
            for b in 0..supersample {
                let v = j as f64 - r as f64 + (b as f64 + 0.5) / ss - 0.5;
                for a in 0..supersample {
                    let u = i as f64 - r as f64 + (a as f64 + 0.5) / ss - 0.5;
                    acc += profile.eval(u / s, v / s);
                }
            }
            data[j * dim + i] = acc;
        }
    }
    let total: f64 = data.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("PSF has no energy at this sampling".into()));
    }
    for v in &mut data {
        *v /= total;
    }
    Ok(PsfKernel {
        kernel: Image2D::new(dim, dim, data)?,
        scale_px: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::aperture::{make_aperture, ProfileKind};

    #[test]
    fn blur_scale_examples() {
        let c = OpticalConfig {
            aperture: 0.25e-3,
            ..OpticalConfig::default()
        };
        assert!(blur_scale(1.0, &c).unwrap().abs() < 1e-18);
        let s = blur_scale(0.5, &c).unwrap();
        assert!((s - 0.25e-3 * (8.7 / 9.7 - 1.0)).abs() < 1e-15);
        assert!((s + 2.577e-5).abs() < 1e-8);
        let z = 0.4;
        let at = blur_scale_at(z, 1.0 / z, 0.25e-3, 0.3).unwrap();
        assert!((at + 0.25e-3).abs() < 1e-15);
        assert!(blur_scale(0.0, &c).is_err());
        assert!(blur_scale(-1.0, &c).is_err());
    }

    #[test]
    fn sign_flips_across_focus() {
        let c = OpticalConfig::default();
        assert!(blur_scale(0.9, &c).unwrap() < 0.0);
        assert!(blur_scale(1.1, &c).unwrap() > 0.0);
    }

    #[test]
    fn in_focus_kernel_is_delta() {
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let k = render_psf(&p, 0.0, 20e-6, 4).unwrap();
        assert_eq!(k.kernel.dims(), (1, 1));
        assert_eq!(k.kernel.get(0, 0), 1.0);
    }

    #[test]
    fn pillbox_radius_three_pixels() {
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let k = render_psf(&p, 3.0 * 20e-6, 20e-6, 4).unwrap();
        let sum: f64 = k.kernel.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let r = k.radius() as f64;
        let c = k.kernel.get(k.radius(), k.radius());
        for y in 0..k.kernel.height() {
            for x in 0..k.kernel.width() {
                let d = ((x as f64 - r).powi(2) + (y as f64 - r).powi(2)).sqrt();
                let v = k.kernel.get(x, y);
                if d <= 1.5 {
                    assert!((v - c).abs() < 1e-6 * c);
                }
                if d >= 4.0 {
                    assert!(v < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_profiles_ignore_sign() {
        for kind in ProfileKind::PRESETS {
            let p = ApertureProfile::preset(kind);
            let a = render_psf(&p, 2.7 * 20e-6, 20e-6, 8).unwrap();
            let b = render_psf(&p, -2.7 * 20e-6, 20e-6, 8).unwrap();
            for (x, y) in a.kernel.data().iter().zip(b.kernel.data()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn negative_scale_point_reflects() {
        let p = make_aperture(ProfileKind::Custom, Some(2.0), Some(vec![(0.5, 0.2)]), Some(vec![0.3])).unwrap();
        let a = render_psf(&p, 4.0 * 20e-6, 20e-6, 4).unwrap().kernel;
        let b = render_psf(&p, -4.0 * 20e-6, 20e-6, 4).unwrap().kernel;
        let (w, h) = a.dims();
        for y in 0..h {
            for x in 0..w {
                assert!((a.get(x, y) - b.get(w - 1 - x, h - 1 - y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn every_kernel_has_unit_sum() {
        for kind in ProfileKind::PRESETS {
            let p = ApertureProfile::preset(kind);
            for s in [0.3, 1.0, 2.2, 7.5, 19.0, -5.5] {
                let k = render_psf(&p, s * 20e-6, 20e-6, auto_supersample(s)).unwrap();
                let sum: f64 = k.kernel.data().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}
