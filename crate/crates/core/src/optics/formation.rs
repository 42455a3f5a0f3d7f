//! Defocused image synthesis I = k_σ ⊛ P.

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::filter::convolve_valid;
use crate::image::Image2D;
use crate::optics::aperture::ApertureProfile;
use crate::optics::projection::pinhole_project;
use crate::optics::psf::{auto_supersample, blur_scale_at, render_psf, PsfKernel};
use crate::optics::texture::SceneTexture;

/// Optical state for one exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exposure {
    pub rho: f64,
    pub aperture: f64,
}

/// PSF of one exposure for a plane at depth `z`.
pub fn exposure_psf(profile: &ApertureProfile, z: f64, e: Exposure, config: &OpticalConfig) -> Result<PsfKernel> {
    if !(e.aperture > 0.0) {
        return Err(Error::Domain(format!("aperture radius must be positive, got {}", e.aperture)));
    }
    let sigma = blur_scale_at(z, e.rho, e.aperture, config.sensor_dist)?;
    let s_px = sigma / config.pixel_pitch;
    render_psf(profile, sigma, config.pixel_pitch, auto_supersample(s_px * profile.feature_radius()))
}

/// Renders several exposures of the same scene, sharing one projection
/// padded by the largest kernel radius. Brightness is that of the nominal
/// aperture (no flux scaling).
pub fn form_images(
    texture: &SceneTexture,
    z: f64,
    profile: &ApertureProfile,
    config: &OpticalConfig,
    exposures: &[Exposure],
    dims: (usize, usize),
) -> Result<Vec<Image2D>> {
    let psfs = exposures
        .iter()
        .map(|&e| exposure_psf(profile, z, e, config))
        .collect::<Result<Vec<_>>>()?;
    let pad = psfs.iter().map(|p| p.radius()).max().unwrap_or(0);
    let field = pinhole_project(
        texture,
        z,
        config.sensor_dist,
        config.pixel_pitch,
        (dims.0 + 2 * pad, dims.1 + 2 * pad),
    )?;
    psfs.iter()
        .map(|p| {
            let off = pad - p.radius();
            let sub = field.crop(off, off, dims.0 + 2 * p.radius(), dims.1 + 2 * p.radius())?;
            convolve_valid(&sub, &p.kernel)
        })
        .collect()
}

/// Single defocused image with optional ρ and A overrides.
pub fn form_image(
    texture: &SceneTexture,
    z: f64,
    profile: &ApertureProfile,
    config: &OpticalConfig,
    rho: Option<f64>,
    aperture: Option<f64>,
    dims: (usize, usize),
) -> Result<Image2D> {
    let e = Exposure {
        rho: rho.unwrap_or(config.rho),
        aperture: aperture.unwrap_or(config.aperture),
    };
    Ok(form_images(texture, z, profile, config, &[e], dims)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::aperture::ProfileKind;
    use crate::optics::texture::{generate_texture, TextureKind};

    fn tex() -> SceneTexture {
        generate_texture(&TextureKind::OneOverF, (256, 256), 1).unwrap()
    }

    #[test]
    fn in_focus_equals_pinhole() {
        let c = OpticalConfig::default();
        let t = tex();
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let img = form_image(&t, c.focus_depth(), &p, &c, None, None, (40, 30)).unwrap();
        let pin = pinhole_project(&t, c.focus_depth(), c.sensor_dist, c.pixel_pitch, (40, 30)).unwrap();
        assert_eq!(img, pin);
    }

    #[test]
    fn constant_scene_stays_constant() {
        let c = OpticalConfig::default();
        let t = SceneTexture::new(Image2D::filled(300, 300, 0.4), 6e-4).unwrap();
        for kind in ProfileKind::PRESETS {
            let img = form_image(&t, 0.5, &ApertureProfile::preset(kind), &c, None, None, (20, 20)).unwrap();
            assert!(img.data().iter().all(|v| (v - 0.4).abs() < 1e-12));
        }
    }

    #[test]
    fn blur_conserves_energy() {
        // A periodic texture makes the padded field's mean equal the valid
        // region's mean, so the check isolates the kernel normalization.
        let c = OpticalConfig::default();
        let period = 16usize;
        let t = SceneTexture::new(
            Image2D::from_fn(400, 400, |x, y| {
                1.0 + 0.5 * (2.0 * std::f64::consts::PI * x as f64 / period as f64).sin()
                    * (2.0 * std::f64::consts::PI * y as f64 / period as f64).cos()
            }),
            c.pixel_pitch * 0.5 / c.sensor_dist,
        )
        .unwrap();
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let img = form_image(&t, 0.5, &p, &c, None, None, (64, 64)).unwrap();
        let pin = pinhole_project(&t, 0.5, c.sensor_dist, c.pixel_pitch, (64, 64)).unwrap();
        assert!((img.mean() - pin.mean()).abs() <= 1e-9 * pin.mean());
    }

    #[test]
    fn nonpositive_aperture_is_rejected() {
        let c = OpticalConfig::default();
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        assert!(form_image(&tex(), 0.5, &p, &c, None, Some(-1e-3), (8, 8)).is_err());
    }
}
