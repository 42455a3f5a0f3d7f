//! Ratio-to-depth look-up table and LUT inference over derivative planes.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::estimator::depth::{build_ratio_planes, check_window, windowed_confidence, DepthResult, EPS_DIV};
use crate::estimator::derivatives::DerivativePair;
use crate::image::Image2D;

/// Default bin count.
pub const DEFAULT_BINS: usize = 4096;

/// Uniformly binned map from the ratio r = num/den to depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthLut {
    pub r_min: f64,
    pub r_max: f64,
    pub depth_of_bin: Vec<f64>,
    /// Hash of the optical configuration the table was built for.
    pub config_hash: String,
}

impl DepthLut {
    pub fn new(r_min: f64, r_max: f64, depth_of_bin: Vec<f64>, config_hash: String) -> Result<Self> {
        if depth_of_bin.len() < 2 {
            return Err(Error::Parameter("a LUT needs at least 2 bins".into()));
        }
        if !(r_min < r_max) || !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::ZeroWidthRange(format!("[{r_min}, {r_max}]")));
        }
        if depth_of_bin.iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical("LUT holds a non-finite depth".into()));
        }
        Ok(DepthLut { r_min, r_max, depth_of_bin, config_hash })
    }

    /// Table of the analytic map Z = Z_s·r sampled at bin centers.
    pub fn from_closed_form(config: &OpticalConfig, r_min: f64, r_max: f64, bins: usize) -> Result<Self> {
        let step = (r_max - r_min) / bins as f64;
        let depths = (0..bins)
            .map(|b| config.sensor_dist * (r_min + (b as f64 + 0.5) * step))
            .collect();
        DepthLut::new(r_min, r_max, depths, config.hash())
    }

    pub fn bins(&self) -> usize {
        self.depth_of_bin.len()
    }

    /// Width of one bin in ratio units.
    pub fn ratio_step(&self) -> f64 {
        (self.r_max - self.r_min) / self.bins() as f64
    }

    /// Largest depth jump between adjacent bins.
    pub fn depth_step(&self) -> f64 {
        self.depth_of_bin
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    /// Bin index for a ratio, or `None` when out of range.
    pub fn bin_of(&self, r: f64) -> Option<usize> {
        if !(r >= self.r_min && r <= self.r_max) {
            return None;
        }
        let b = ((r - self.r_min) / self.ratio_step()).floor();
        Some((b.max(0.0) as usize).min(self.bins() - 1))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# codiff depth look-up table\n");
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "r_min = {:?}", self.r_min);
        let _ = writeln!(s, "r_max = {:?}", self.r_max);
        let _ = writeln!(s, "bins = {}", self.bins());
        for d in &self.depth_of_bin {
            let _ = writeln!(s, "{d:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (mut hash, mut r_min, mut r_max, mut bins) = (None, None, None, None);
        let mut depths = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                let v = v.trim();
                let num = || v.parse::<f64>().map_err(|_| Error::Parse(format!("bad LUT value '{v}'")));
                match k.trim() {
                    "config_hash" => hash = Some(v.to_string()),
                    "r_min" => r_min = Some(num()?),
                    "r_max" => r_max = Some(num()?),
                    "bins" => bins = Some(v.parse::<usize>().map_err(|_| Error::Parse("bad bin count".into()))?),
                    other => return Err(Error::Parse(format!("unknown LUT key '{other}'"))),
                }
            } else {
                depths.push(line.parse::<f64>().map_err(|_| Error::Parse(format!("bad LUT depth '{line}'")))?);
            }
        }
        let missing = |k: &str| Error::Parse(format!("LUT header lacks {k}"));
        let bins = bins.ok_or_else(|| missing("bins"))?;
        if depths.len() != bins {
            return Err(Error::Parse(format!("LUT declares {bins} bins but lists {}", depths.len())));
        }
        DepthLut::new(
            r_min.ok_or_else(|| missing("r_min"))?,
            r_max.ok_or_else(|| missing("r_max"))?,
            depths,
            hash.ok_or_else(|| missing("config_hash"))?,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::image::write_all(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Errors unless the table was built for `config`.
    pub fn check_config(&self, config: &OpticalConfig) -> Result<()> {
        let h = config.hash();
        if h != self.config_hash {
            return Err(Error::ConfigMismatch(format!(
                "LUT built for config {} but capture has config {h}",
                self.config_hash
            )));
        }
        Ok(())
    }
}

/// LUT inference: depth from the digitized ratio num/den; out-of-range
/// ratios and vanishing den are invalid; then confidence thresholding.
pub fn depth_via_lut(deriv: &DerivativePair, lut: &DepthLut, window: usize, c_thre: f64) -> Result<DepthResult> {
    check_window(window)?;
    lut.check_config(&deriv.config)?;
    let (num, den) = build_ratio_planes(deriv, window)?;
    let conf = windowed_confidence(deriv, window)?;
    let mut depth = Vec::with_capacity(num.len());
    let mut valid = Vec::with_capacity(num.len());
    for ((&nu, &de), &cf) in num.data().iter().zip(den.data()).zip(conf.data()) {
        let bin = if de >= EPS_DIV { lut.bin_of(nu / de) } else { None };
        match bin {
            Some(b) if cf > c_thre => {
                depth.push(lut.depth_of_bin[b]);
                valid.push(true);
            }
            _ => {
                depth.push(0.0);
                valid.push(false);
            }
        }
    }
    let (w, h) = deriv.dims();
    DepthResult::new(Image2D::new(w, h, depth)?, conf, valid)
}
