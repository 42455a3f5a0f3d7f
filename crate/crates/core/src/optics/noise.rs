//! Photon-referred noise I = I* + √(I*)·ε with ε ~ N(0, 1/λ).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::rng::rng_for;

/// Photons per brightness level λ and the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub lambda: f64,
    pub seed: u64,
}

/// Calibrated photon-per-brightness-level value of the prototype.
pub const PROTOTYPE_LAMBDA: f64 = 0.9375;

impl NoiseModel {
    pub fn new(lambda: f64, seed: u64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(NoiseModel { lambda, seed })
    }

    /// Same λ with a seed derived for a sub-stream.
    pub fn child(&self, path: &[u64]) -> NoiseModel {
        NoiseModel {
            lambda: self.lambda,
            seed: crate::rng::derive_seed(self.seed, path),
        }
    }
}

/// Adds independent Gaussian noise of variance I*/λ per pixel and clamps
/// at zero.
pub fn add_noise(image: &Image2D, noise: &NoiseModel) -> Result<Image2D> {
    if !(noise.lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {}", noise.lambda)));
    }
    if image.min() < 0.0 {
        return Err(Error::Domain("noise model needs a nonnegative image".into()));
    }
    let mut rng = rng_for(noise.seed, &[]);
    let inv = 1.0 / noise.lambda;
    Image2D::new(
        image.width(),
        image.height(),
        image
            .data()
            .iter()
            .map(|&v| {
                let e: f64 = rng.sample(StandardNormal);
                (v + (v * inv).sqrt() * e).max(0.0)
            })
            .collect(),
    )
}
