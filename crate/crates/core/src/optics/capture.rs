//! Synthesis of the four-image capture stack I(ρ±Δρ, A), I(ρ, A±ΔA).

use crate::calibration::magnification::{pixel_correspondence, MagnificationModel};
use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::optics::aperture::ApertureProfile;
use crate::optics::formation::{form_images, Exposure};
use crate::optics::noise::{add_noise, NoiseModel};
use crate::optics::projection::bilinear;
use crate::optics::texture::SceneTexture;

/// Four registered images of one static scene. The A± images hold raw
/// brightness, proportional to aperture area.
#[derive(Debug, Clone)]
pub struct QuadCapture {
    pub rho_plus: Image2D,
    pub rho_minus: Image2D,
    pub a_plus: Image2D,
    pub a_minus: Image2D,
    pub config: OpticalConfig,
    /// Ground-truth depth for simulated captures.
    pub z_true: Option<f64>,
    pub noise: Option<NoiseModel>,
}

impl QuadCapture {
    /// Assembles a capture from existing images, checking dimensions.
    pub fn new(
        rho_plus: Image2D,
        rho_minus: Image2D,
        a_plus: Image2D,
        a_minus: Image2D,
        config: OpticalConfig,
    ) -> Result<Self> {
        rho_plus.check_same_dims(&rho_minus, "ρ± images")?;
        rho_plus.check_same_dims(&a_plus, "ρ+ vs A+ image")?;
        rho_plus.check_same_dims(&a_minus, "ρ+ vs A− image")?;
        Ok(QuadCapture {
            rho_plus,
            rho_minus,
            a_plus,
            a_minus,
            config,
            z_true: None,
            noise: None,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.rho_plus.dims()
    }

    /// Copy with every image rounded and clamped to 16-bit levels.
    pub fn quantized(&self) -> QuadCapture {
        QuadCapture {
            rho_plus: self.rho_plus.quantize16(),
            rho_minus: self.rho_minus.quantize16(),
            a_plus: self.a_plus.quantize16(),
            a_minus: self.a_minus.quantize16(),
            ..self.clone()
        }
    }

    pub fn images(&self) -> [&Image2D; 4] {
        [&self.rho_plus, &self.rho_minus, &self.a_plus, &self.a_minus]
    }
}

/// Renders the four noiseless images (ρ+Δρ, ρ−Δρ, A+ΔA, A−ΔA) for explicit
/// steps, which may be zero. A± images carry raw flux scaling.
pub fn capture_images(
    texture: &SceneTexture,
    z: f64,
    profile: &ApertureProfile,
    config: &OpticalConfig,
    delta_rho: f64,
    delta_a: f64,
    mag: Option<&MagnificationModel>,
    dims: (usize, usize),
) -> Result<[Image2D; 4]> {
    let a = config.aperture;
    if !(a - delta_a > 0.0) {
        return Err(Error::Domain(format!(
            "aperture step exceeds the aperture: A − ΔA = {} m",
            a - delta_a
        )));
    }
    let exposures = [
        Exposure { rho: config.rho + delta_rho, aperture: a },
        Exposure { rho: config.rho - delta_rho, aperture: a },
        Exposure { rho: config.rho, aperture: a + delta_a },
        Exposure { rho: config.rho, aperture: a - delta_a },
    ];
    let margin = match mag {
        Some(m) => shift_margin(m, config, delta_rho, dims)?,
        None => 0,
    };
    let (rho_imgs, a_imgs) = if margin == 0 {
        let mut all = form_images(texture, z, profile, config, &exposures, dims)?;
        let a_imgs = all.split_off(2);
        (all, a_imgs)
    } else {
        let big = (dims.0 + 2 * margin, dims.1 + 2 * margin);
        let rho_big = form_images(texture, z, profile, config, &exposures[..2], big)?;
        let m = mag.expect("margin implies a model");
        let rho_imgs = rho_big
            .iter()
            .zip(&exposures[..2])
            .map(|(img, e)| emulate_shift(img, m, e.rho, config.rho, margin, dims))
            .collect::<Result<Vec<_>>>()?;
        (rho_imgs, form_images(texture, z, profile, config, &exposures[2..], dims)?)
    };
    let flux = |ap: f64| (ap / a).powi(2);
    let [rp, rm]: [Image2D; 2] = rho_imgs.try_into().expect("two images");
    let [ap, am]: [Image2D; 2] = a_imgs.try_into().expect("two images");
    Ok([
        rp,
        rm,
        ap.map(|v| v * flux(a + delta_a)),
        am.map(|v| v * flux(a - delta_a)),
    ])
}

/// Simulates the four-image capture at the configuration's steps, with
/// independent noise per image and optional magnification shift on ρ±.
pub fn capture_quad(
    texture: &SceneTexture,
    z: f64,
    profile: &ApertureProfile,
    config: &OpticalConfig,
    noise: Option<&NoiseModel>,
    mag: Option<&MagnificationModel>,
    dims: (usize, usize),
) -> Result<QuadCapture> {
    let imgs = capture_images(texture, z, profile, config, config.delta_rho, config.delta_a, mag, dims)?;
    let [rp, rm, ap, am] = match noise {
        Some(n) => {
            let mut out = Vec::with_capacity(4);
            for (k, img) in imgs.iter().enumerate() {
                out.push(add_noise(img, &n.child(&[k as u64]))?);
            }
            let arr: [Image2D; 4] = out.try_into().expect("four images");
            arr
        }
        None => imgs,
    };
    let mut q = QuadCapture::new(rp, rm, ap, am, *config)?;
    q.z_true = Some(z);
    q.noise = noise.copied();
    Ok(q)
}

fn shift_margin(m: &MagnificationModel, c: &OpticalConfig, delta_rho: f64, dims: (usize, usize)) -> Result<usize> {
    let (w, h) = (dims.0 as f64 - 1.0, dims.1 as f64 - 1.0);
    let mut worst: f64 = 0.0;
    for rho in [c.rho + delta_rho, c.rho - delta_rho] {
        for corner in [[0.0, 0.0], [w, 0.0], [0.0, h], [w, h]] {
            let p = pixel_correspondence(m, rho, c.rho, corner)?;
            worst = worst.max((p[0] - corner[0]).abs()).max((p[1] - corner[1]).abs());
        }
    }
    Ok(worst.ceil() as usize + 2)
}

/// Image at power `rho` of a scene rendered in the geometry of `rho_ref`.
fn emulate_shift(
    img: &Image2D,
    m: &MagnificationModel,
    rho: f64,
    rho_ref: f64,
    margin: usize,
    dims: (usize, usize),
) -> Result<Image2D> {
    let off = margin as f64;
    let mut data = Vec::with_capacity(dims.0 * dims.1);
    for y in 0..dims.1 {
        for x in 0..dims.0 {
            let p = pixel_correspondence(m, rho, rho_ref, [x as f64, y as f64])?;
            data.push(bilinear(img, p[0] + off, p[1] + off));
        }
    }
    Image2D::new(dims.0, dims.1, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::aperture::ProfileKind;
    use crate::optics::texture::{generate_texture, TextureKind};

    #[test]
    fn degenerate_steps_give_identical_images() {
        let t = generate_texture(&TextureKind::OneOverF, (256, 256), 2).unwrap();
        let c = OpticalConfig::default();
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let imgs = capture_images(&t, 0.6, &p, &c, 0.0, 0.0, None, (24, 24)).unwrap();
        for img in &imgs[1..] {
            assert_eq!(img, &imgs[0]);
        }
    }

    #[test]
    fn raw_flux_ratio() {
        let t = SceneTexture::new(Image2D::filled(400, 400, 0.5), 6e-4).unwrap();
        let c = OpticalConfig::default();
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        let q = capture_quad(&t, 0.6, &p, &c, None, None, (16, 16)).unwrap();
        let ratio = q.a_plus.mean() / q.a_minus.mean();
        let expect = ((c.aperture + c.delta_a) / (c.aperture - c.delta_a)).powi(2);
        assert!((ratio / expect - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_effective_aperture_is_rejected() {
        let t = generate_texture(&TextureKind::OneOverF, (64, 64), 2).unwrap();
        let c = OpticalConfig { aperture: 0.25e-3, ..OpticalConfig::default() };
        let p = ApertureProfile::preset(ProfileKind::Pillbox);
        assert!(matches!(capture_quad(&t, 0.6, &p, &c, None, None, (8, 8)), Err(Error::Domain(_))));
    }

    #[test]
    fn magnification_shifts_point_sources() {
        let c = OpticalConfig::default();
        let m = MagnificationModel { a_mat: [[5e-3, 0.0], [0.0, 5e-3]], lambda: [20.0, -10.0], rho0: c.rho };
        let mut tex = Image2D::zeros(401, 401).into_data();
        let (px, py) = (200 + 12, 200 - 7);
        tex[py * 401 + px] = 1.0;
        // One texel per pixel at the focus depth, so the point stays sharp.
        let z = c.focus_depth();
        let t = SceneTexture::new(Image2D::new(401, 401, tex).unwrap(), z / c.sensor_dist * c.pixel_pitch).unwrap();
        let p = ApertureProfile::preset(ProfileKind::Gaussian);
        let c2 = c.with_steps(0.2, 1e-3).unwrap();
        let q = capture_quad(&t, z, &p, &c2, None, Some(&m), (61, 61)).unwrap();
        let centroid = |img: &Image2D| {
            let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
            for y in 0..61 {
                for x in 0..61 {
                    let v = img.get(x, y);
                    s += v;
                    sx += v * x as f64;
                    sy += v * y as f64;
                }
            }
            [sx / s, sy / s]
        };
        let reference = centroid(&q.a_plus);
        let expect = pixel_correspondence(&m, c.rho, c2.rho + c2.delta_rho, reference).unwrap();
        let got = centroid(&q.rho_plus);
        assert!((got[0] - expect[0]).abs() < 0.05 && (got[1] - expect[1]).abs() < 0.05, "{got:?} {expect:?}");
    }
}
