//! Aperture-profile comparison: MAE per preset and the amplitude spectrum
//! of the ρ-derivative kernel k(ρ+Δρ) − k(ρ−Δρ).

use std::fmt::Write as _;

use crate::config::OpticalConfig;
use crate::error::Result;
use crate::filter::radial_amplitude_spectrum;
use crate::image::Image2D;
use crate::optics::{exposure_psf, ApertureProfile, Exposure, ProfileKind};

use super::dataset::Dataset;
use super::sweep::{mae_sweep, DepthSweepResult, EstimatorSpec, Threshold};

/// Depth at which derivative-kernel spectra are taken by default, between
/// the near end of the study grid and focus.
pub const DEFAULT_SPECTRUM_DEPTH: f64 = 0.6;
/// Minimum FFT size of the spectra; a study uses one size for all profiles.
pub const SPECTRUM_SIZE: usize = 64;

/// Radial spectrum of a profile's derivative kernel at depth `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSpectrum {
    pub kind: ProfileKind,
    /// (frequency in cycles/pixel, amplitude).
    pub bins: Vec<(f64, f64)>,
    /// |Σ k(ρ+Δρ) − k(ρ−Δρ)|, the DC amplitude.
    pub dc: f64,
}

fn embed(k: &Image2D, dim: usize) -> Image2D {
    let off = (dim - k.width()) / 2;
    Image2D::from_fn(dim, dim, |x, y| {
        if x >= off && y >= off && x - off < k.width() && y - off < k.height() {
            k.get(x - off, y - off)
        } else {
            0.0
        }
    })
}

/// k(ρ+Δρ) − k(ρ−Δρ) for a plane at `z`, centered on a common square grid.
pub fn derivative_kernel(profile: &ApertureProfile, z: f64, config: &OpticalConfig) -> Result<Image2D> {
    let exp = |rho| Exposure {
        rho,
        aperture: config.aperture,
    };
    let kp = exposure_psf(profile, z, exp(config.rho + config.delta_rho), config)?.kernel;
    let km = exposure_psf(profile, z, exp(config.rho - config.delta_rho), config)?.kernel;
    let dim = kp.width().max(km.width());
    embed(&kp, dim).zip_map(&embed(&km, dim), |a, b| a - b)
}

/// Amplitude spectrum of the derivative kernel on an FFT of `size`
/// (raised to the kernel dimension if smaller). Spectra are only
/// comparable bin by bin when taken at the same size.
pub fn derivative_spectrum(
    profile: &ApertureProfile,
    z: f64,
    config: &OpticalConfig,
    size: usize,
) -> Result<DerivativeSpectrum> {
    let diff = derivative_kernel(profile, z, config)?;
    Ok(spectrum_of(profile.kind(), &diff, size))
}

fn spectrum_of(kind: ProfileKind, diff: &Image2D, size: usize) -> DerivativeSpectrum {
    DerivativeSpectrum {
        kind,
        bins: radial_amplitude_spectrum(diff, size.max(diff.width())),
        dc: diff.data().iter().sum::<f64>().abs(),
    }
}

/// Per-profile sweeps and spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureStudy {
    pub sweeps: Vec<(ProfileKind, DepthSweepResult)>,
    pub spectra: Vec<DerivativeSpectrum>,
    /// 1/f line through the mean first-bin amplitude.
    pub reference: Vec<(f64, f64)>,
    pub spectrum_depth: f64,
}

impl ApertureStudy {
    pub const MAE_CSV_HEADER: &'static str = "profile,depth_m,mae_m,mean_dev_m,kept_pixels";
    pub const SPECTRUM_CSV_HEADER: &'static str = "profile,frequency,amplitude";

    pub fn mae_csv(&self) -> String {
        let mut s = String::from(Self::MAE_CSV_HEADER);
        s.push('\n');
        for (kind, sw) in &self.sweeps {
            for i in 0..sw.depths.len() {
                let _ = writeln!(
                    s,
                    "{},{:.6},{:.6e},{:.6e},{}",
                    kind.name(),
                    sw.depths[i],
                    sw.mae[i],
                    sw.mean_dev[i],
                    sw.kept[i]
                );
            }
        }
        s
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from(Self::SPECTRUM_CSV_HEADER);
        s.push('\n');
        for sp in &self.spectra {
            for (f, a) in &sp.bins {
                let _ = writeln!(s, "{},{:.6},{:.6e}", sp.kind.name(), f, a);
            }
        }
        for (f, a) in &self.reference {
            let _ = writeln!(s, "one_over_f,{f:.6},{a:.6e}");
        }
        s
    }

    /// Number of depths at which each profile has the lowest MAE.
    pub fn wins(&self) -> Vec<(ProfileKind, usize)> {
        let n = self.sweeps.first().map_or(0, |s| s.1.depths.len());
        let mut wins = vec![0usize; self.sweeps.len()];
        for d in 0..n {
            let best = (0..self.sweeps.len())
                .min_by(|&a, &b| self.sweeps[a].1.mae[d].total_cmp(&self.sweeps[b].1.mae[d]))
                .expect("at least one profile");
            wins[best] += 1;
        }
        self.sweeps.iter().map(|s| s.0).zip(wins).collect()
    }
}

/// Runs [`mae_sweep`] with each preset profile on the dataset's scenes and
/// computes derivative-kernel spectra at `spectrum_depth`.
pub fn aperture_study(
    ds: &Dataset,
    spec: &EstimatorSpec,
    threshold: Threshold,
    spectrum_depth: f64,
) -> Result<ApertureStudy> {
    let mut sweeps = Vec::new();
    let mut kernels = Vec::new();
    for kind in ProfileKind::PRESETS {
        let profile = ApertureProfile::preset(kind);
        let sub = Dataset {
            profile: profile.clone(),
            ..ds.clone()
        };
        sweeps.push((kind, mae_sweep(&sub, spec, threshold)?));
        kernels.push((kind, derivative_kernel(&profile, spectrum_depth, &ds.config)?));
    }
    let size = kernels
        .iter()
        .map(|(_, k)| k.width())
        .max()
        .unwrap_or(0)
        .max(SPECTRUM_SIZE)
        .next_power_of_two();
    let spectra: Vec<_> = kernels.iter().map(|(kind, k)| spectrum_of(*kind, k, size)).collect();
    let a0 = spectra.iter().map(|s| s.bins[0].1).sum::<f64>() / spectra.len() as f64;
    let f0 = spectra[0].bins[0].0;
    let reference = spectra[0].bins.iter().map(|&(f, _)| (f, a0 * f0 / f)).collect();
    Ok(ApertureStudy {
        sweeps,
        spectra,
        reference,
        spectrum_depth,
    })
}
