//! Optical finite differences I_ρ, I_A and brightness normalization.

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::filter::box_mean;
use crate::image::Image2D;
use crate::optics::QuadCapture;

/// Default background-removal box dimension.
pub const DEFAULT_BACKGROUND_DIM: usize = 21;

/// Per-pixel optical derivatives: I_ρ in brightness per diopter, I_A in
/// brightness per meter.
#[derive(Debug, Clone)]
pub struct DerivativePair {
    pub d_rho: Image2D,
    pub d_a: Image2D,
    pub config: OpticalConfig,
}

impl DerivativePair {
    pub fn new(d_rho: Image2D, d_a: Image2D, config: OpticalConfig) -> Result<Self> {
        d_rho.check_same_dims(&d_a, "derivative planes")?;
        Ok(DerivativePair { d_rho, d_a, config })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.d_rho.dims()
    }
}

/// Scales a raw A±ΔA image by (A/(A ± ΔA))² to the brightness of aperture A.
pub fn normalize_brightness(raw: &Image2D, aperture: f64, delta_a: f64, sign: i8) -> Result<Image2D> {
    let eff = aperture + sign.signum() as f64 * delta_a;
    if !(eff > 0.0) || !(aperture > 0.0) {
        return Err(Error::Domain(format!("effective aperture must be positive, got {eff}")));
    }
    let f = (aperture / eff).powi(2);
    Ok(raw.map(|v| v * f))
}

/// Central difference (I(ρ+Δρ) − I(ρ−Δρ)) / 2Δρ.
pub fn finite_diff_rho(quad: &QuadCapture) -> Result<Image2D> {
    let dr = quad.config.delta_rho;
    if !(dr > 0.0) {
        return Err(Error::Parameter("delta_rho must be positive".into()));
    }
    let inv = 1.0 / (2.0 * dr);
    quad.rho_plus.zip_map(&quad.rho_minus, |p, m| (p - m) * inv)
}

/// Central difference of the brightness-normalized A± images, with an
/// optional `dim`x`dim` box-filtered background subtracted.
pub fn finite_diff_a(quad: &QuadCapture, background_dim: Option<usize>) -> Result<Image2D> {
    let c = &quad.config;
    if let Some(d) = background_dim {
        if d % 2 == 0 || d == 0 {
            return Err(Error::Parameter(format!("background dimension must be odd, got {d}")));
        }
    }
    let plus = normalize_brightness(&quad.a_plus, c.aperture, c.delta_a, 1)?;
    let minus = normalize_brightness(&quad.a_minus, c.aperture, c.delta_a, -1)?;
    let inv = 1.0 / (2.0 * c.delta_a);
    let diff = plus.zip_map(&minus, |p, m| (p - m) * inv)?;
    match background_dim {
        Some(d) => remove_background(&diff, d),
        None => Ok(diff),
    }
}

/// Subtracts the `dim`x`dim` box mean: I − B ∗ I.
pub fn remove_background(img: &Image2D, dim: usize) -> Result<Image2D> {
    let bg = box_mean(img, dim)?;
    img.zip_map(&bg, |v, b| v - b)
}

/// Both derivatives of a capture.
pub fn derivatives(quad: &QuadCapture, background_dim: Option<usize>) -> Result<DerivativePair> {
    DerivativePair::new(finite_diff_rho(quad)?, finite_diff_a(quad, background_dim)?, quad.config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_of(imgs: [Image2D; 4]) -> QuadCapture {
        let [a, b, c, d] = imgs;
        QuadCapture::new(a, b, c, d, OpticalConfig::default()).unwrap()
    }

    #[test]
    fn normalization_factors() {
        let img = Image2D::filled(2, 2, 8.0);
        assert_eq!(normalize_brightness(&img, 1e-3, 0.0, 1).unwrap(), img);
        let n = normalize_brightness(&img, 0.25e-3, 0.25e-3, 1).unwrap();
        assert!((n.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(normalize_brightness(&img, 0.25e-3, 1e-3, -1).is_err());
    }

    #[test]
    fn normalized_constant_images_match() {
        let c = OpticalConfig::default();
        let base = 100.0;
        let plus = Image2D::filled(3, 3, base * ((c.aperture + c.delta_a) / c.aperture).powi(2));
        let minus = Image2D::filled(3, 3, base * ((c.aperture - c.delta_a) / c.aperture).powi(2));
        let p = normalize_brightness(&plus, c.aperture, c.delta_a, 1).unwrap();
        let m = normalize_brightness(&minus, c.aperture, c.delta_a, -1).unwrap();
        for (a, b) in p.data().iter().zip(m.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn identical_images_have_zero_rho_derivative() {
        let img = Image2D::from_fn(5, 4, |x, y| (x + 3 * y) as f64);
        let q = quad_of([img.clone(), img.clone(), img.clone(), img]);
        assert!(finite_diff_rho(&q).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn background_off_is_plain_difference() {
        let c = OpticalConfig::default();
        let a = Image2D::from_fn(9, 9, |x, y| (x * y) as f64);
        let b = Image2D::from_fn(9, 9, |x, _| x as f64);
        let q = quad_of([a.clone(), a.clone(), a.clone(), b.clone()]);
        let got = finite_diff_a(&q, None).unwrap();
        let np = (c.aperture / (c.aperture + c.delta_a)).powi(2);
        let nm = (c.aperture / (c.aperture - c.delta_a)).powi(2);
        for i in 0..81 {
            let expect = (np * a.data()[i] - nm * b.data()[i]) / (2.0 * c.delta_a);
            assert!((got.data()[i] - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
        assert!(finite_diff_a(&q, Some(20)).is_err());
    }
}
