//! Synthetic study datasets: textures, depth grids and per-cell captures.

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::optics::{capture_quad, generate_texture, ApertureProfile, NoiseModel, ProfileKind, QuadCapture, SceneTexture, TextureKind, PROTOTYPE_LAMBDA};
use crate::rng::derive_seed;

/// Default depth grid: 24 log-spaced depths over [0.3, 3.0] m.
pub const DEFAULT_DEPTH_RANGE: (f64, f64) = (0.3, 3.0);
pub const DEFAULT_DEPTH_COUNT: usize = 24;
/// Default number of 1/f textures per study.
pub const DEFAULT_TEXTURE_COUNT: usize = 20;
/// Side of generated textures in texels.
pub const TEXTURE_SIZE: usize = 256;
/// Peak brightness of study textures (16-bit full scale).
pub const FULL_SCALE: f64 = 65535.0;

/// `n` log-spaced values over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::Parameter(format!("log grid needs 0 < lo < hi and n ≥ 2, got [{lo}, {hi}] n={n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// `n` full-scale 1/f textures; texture `i` depends only on `(seed, i)`.
pub fn study_textures(n: usize, seed: u64) -> Result<Vec<SceneTexture>> {
    (0..n)
        .map(|i| generate_texture(&TextureKind::OneOverF, (TEXTURE_SIZE, TEXTURE_SIZE), derive_seed(seed, &[0x7e, i as u64]))?.scaled(FULL_SCALE))
        .collect()
}

/// Scenes, depths and capture settings shared by a study. Every cell
/// (texture, depth, trial) draws its noise from a seed derived from the
/// cell index, so results do not depend on evaluation order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: OpticalConfig,
    pub profile: ApertureProfile,
    pub textures: Vec<SceneTexture>,
    pub depths: Vec<f64>,
    pub dims: (usize, usize),
    /// Photons per brightness level; `None` for noiseless captures.
    pub lambda: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// One (texture, depth, trial) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub texture: usize,
    pub depth: usize,
    pub trial: usize,
}

impl Dataset {
    /// Default study: pillbox aperture, default config, 24 depths, 20
    /// textures, 64x64 crops, prototype noise, one trial.
    pub fn study_default(seed: u64) -> Result<Dataset> {
        let (lo, hi) = DEFAULT_DEPTH_RANGE;
        Ok(Dataset {
            config: OpticalConfig::default(),
            profile: ApertureProfile::preset(ProfileKind::Pillbox),
            textures: study_textures(DEFAULT_TEXTURE_COUNT, seed)?,
            depths: log_space(lo, hi, DEFAULT_DEPTH_COUNT)?,
            dims: (64, 64),
            lambda: Some(PROTOTYPE_LAMBDA),
            trials: 1,
            seed,
        })
    }

    /// Cells in depth-major order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.depths.len() * self.textures.len() * self.trials);
        for depth in 0..self.depths.len() {
            for texture in 0..self.textures.len() {
                for trial in 0..self.trials {
                    out.push(Cell { texture, depth, trial });
                }
            }
        }
        out
    }

    /// Noise model of a cell, if the dataset is noisy.
    pub fn noise_for(&self, cell: Cell) -> Result<Option<NoiseModel>> {
        match self.lambda {
            Some(l) => Ok(Some(
                NoiseModel::new(l, self.seed)?.child(&[cell.texture as u64, cell.depth as u64, cell.trial as u64]),
            )),
            None => Ok(None),
        }
    }

    /// Capture of a cell under `config` (which may differ from the
    /// dataset's in its steps).
    pub fn capture_with(&self, config: &OpticalConfig, cell: Cell) -> Result<QuadCapture> {
        let noise = self.noise_for(cell)?;
        capture_quad(
            &self.textures[cell.texture],
            self.depths[cell.depth],
            &self.profile,
            config,
            noise.as_ref(),
            None,
            self.dims,
        )
    }

    pub fn capture(&self, cell: Cell) -> Result<QuadCapture> {
        self.capture_with(&self.config, cell)
    }

    pub fn validate(&self) -> Result<()> {
        if self.textures.is_empty() || self.depths.is_empty() || self.trials == 0 {
            return Err(Error::Parameter("dataset needs textures, depths and at least one trial".into()));
        }
        if self.depths.windows(2).any(|w| !(w[1] > w[0])) || !(self.depths[0] > 0.0) {
            return Err(Error::Parameter("depths must be positive and strictly increasing".into()));
        }
        Ok(())
    }
}
