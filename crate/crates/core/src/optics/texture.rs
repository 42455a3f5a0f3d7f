//! Scene textures: synthetic 1/f fields, checkerboards, or PGM files.

use std::path::PathBuf;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::rng::rng_for;

/// Default texel size, meters. About three pixels at 1 m with the default
/// sensor distance and a 20 µm pitch.
pub const DEFAULT_TEXEL_SCALE: f64 = 6e-4;

/// Planar scene texture with a physical texel size.
#[derive(Debug, Clone)]
pub struct SceneTexture {
    pub image: Image2D,
    /// Meters per texel on the scene plane.
    pub physical_scale: f64,
}

impl SceneTexture {
    pub fn new(image: Image2D, physical_scale: f64) -> Result<Self> {
        if image.min() < 0.0 {
            return Err(Error::Parameter("texture intensities must be nonnegative".into()));
        }
        if !(physical_scale > 0.0 && physical_scale.is_finite()) {
            return Err(Error::Parameter("texel scale must be positive".into()));
        }
        Ok(SceneTexture { image, physical_scale })
    }

    pub fn with_scale(mut self, physical_scale: f64) -> Result<Self> {
        if !(physical_scale > 0.0 && physical_scale.is_finite()) {
            return Err(Error::Parameter("texel scale must be positive".into()));
        }
        self.physical_scale = physical_scale;
        Ok(self)
    }

    /// Texture with intensities multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        SceneTexture::new(self.image.map(|v| v * gain), self.physical_scale)
    }
}

/// Texture sources.
#[derive(Debug, Clone)]
pub enum TextureKind {
    OneOverF,
    Checker { period: usize },
    File(PathBuf),
}

/// Generates a texture of `dims` (ignored for files) at the default texel scale.
pub fn generate_texture(kind: &TextureKind, dims: (usize, usize), seed: u64) -> Result<SceneTexture> {
    let (w, h) = dims;
    if !matches!(kind, TextureKind::File(_)) && (w == 0 || h == 0) {
        return Err(Error::Parameter("texture dimensions must be positive".into()));
    }
    let image = match kind {
        TextureKind::OneOverF => one_over_f(w, h, seed),
        TextureKind::Checker { period } => {
            if *period == 0 {
                return Err(Error::Parameter("checker period must be positive".into()));
            }
            Image2D::from_fn(w, h, |x, y| ((x / period + y / period) % 2) as f64)
        }
        TextureKind::File(path) => Image2D::read_pgm(path)?,
    };
    SceneTexture::new(image, DEFAULT_TEXEL_SCALE)
}

/// Random phases with amplitude exactly ∝ 1/f, rescaled to [0, 1] with
/// mean 0.5. Phases come from the spectrum of white noise so the field is
/// real by Hermitian symmetry.
fn one_over_f(w: usize, h: usize, seed: u64) -> Image2D {
    let mut rng = rng_for(seed, &[0x7e_c7]);
    let mut buf: Vec<Complex<f64>> = (0..w * h)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    fft2(&mut buf, w, h, false, &mut planner);
    for y in 0..h {
        let fy = signed_freq(y, h) / h as f64;
        for x in 0..w {
            let fx = signed_freq(x, w) / w as f64;
            let f = (fx * fx + fy * fy).sqrt();
            let c = &mut buf[y * w + x];
            let mag = c.norm();
            *c = if f == 0.0 || mag == 0.0 { Complex::new(0.0, 0.0) } else { *c / mag / f };
        }
    }
    fft2(&mut buf, w, h, true, &mut planner);
    let re: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = re.iter().sum::<f64>() / re.len() as f64;
    let dev = re.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let k = if dev > 0.0 { 0.5 / dev } else { 0.0 };
    Image2D::from_vec_unchecked(w, h, re.iter().map(|v| 0.5 + (v - mean) * k).collect())
}

fn signed_freq(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

fn fft2(buf: &mut [Complex<f64>], w: usize, h: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let rf = if inverse { planner.plan_fft_inverse(w) } else { planner.plan_fft_forward(w) };
    for row in buf.chunks_exact_mut(w) {
        rf.process(row);
    }
    let cf = if inverse { planner.plan_fft_inverse(h) } else { planner.plan_fft_forward(h) };
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        cf.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::radial_amplitude_spectrum;

    fn loglog_slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(f, a) in points {
            let (x, y) = (f.ln(), a.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn one_over_f_spectrum_slope() {
        let t = generate_texture(&TextureKind::OneOverF, (256, 256), 5).unwrap();
        assert!(t.image.min() >= 0.0 && t.image.max() <= 1.0 + 1e-12);
        assert!((t.image.mean() - 0.5).abs() < 1e-12);
        let spec = radial_amplitude_spectrum(&t.image, 256);
        let slope = loglog_slope(&spec);
        assert!((slope + 1.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn textures_are_deterministic_per_seed() {
        let a = generate_texture(&TextureKind::OneOverF, (64, 48), 9).unwrap();
        let b = generate_texture(&TextureKind::OneOverF, (64, 48), 9).unwrap();
        let c = generate_texture(&TextureKind::OneOverF, (64, 48), 10).unwrap();
        assert_eq!(a.image, b.image);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn checker_squares() {
        let t = generate_texture(&TextureKind::Checker { period: 8 }, (32, 32), 0).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(t.image.get(x, y), ((x / 8 + y / 8) % 2) as f64);
            }
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = generate_texture(&TextureKind::File("/nonexistent/t.pgm".into()), (1, 1), 0).unwrap_err();
        assert!(e.is_io());
    }
}
