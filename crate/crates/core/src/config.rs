//! Camera state and differentiation steps, plus the key = value file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::units::parse_quantity;

/// Largest optical-power step the prototype lens can take, diopters.
pub const DEFAULT_DELTA_RHO_MAX: f64 = 3.0;
/// Largest aperture-radius step the prototype iris can take, meters.
pub const DEFAULT_DELTA_A_MAX: f64 = 1e-3;

/// Optical configuration. All fields are SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    /// Optical power ρ, diopters.
    pub rho: f64,
    /// Aperture radius A, meters.
    pub aperture: f64,
    /// Lens-to-sensor distance Z_s, meters.
    pub sensor_dist: f64,
    /// Sensor pixel pitch, meters per pixel.
    pub pixel_pitch: f64,
    /// Optical-power step Δρ, diopters.
    pub delta_rho: f64,
    /// Aperture-radius step ΔA, meters.
    pub delta_a: f64,
    /// Feasibility bound on Δρ.
    pub delta_rho_max: f64,
    /// Feasibility bound on ΔA.
    pub delta_a_max: f64,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        OpticalConfig {
            rho: 10.7,
            // Large enough that the 1 mm aperture step stays a modest
            // fraction of the radius.
            aperture: 5e-3,
            sensor_dist: 1.0 / 9.7,
            pixel_pitch: 20e-6,
            delta_rho: 0.06,
            delta_a: 1e-3,
            delta_rho_max: DEFAULT_DELTA_RHO_MAX,
            delta_a_max: DEFAULT_DELTA_A_MAX,
        }
    }
}

const KEYS: [&str; 8] = [
    "rho",
    "A",
    "Z_s",
    "pixel_pitch",
    "delta_rho",
    "delta_A",
    "delta_rho_max",
    "delta_A_max",
];

impl OpticalConfig {
    /// Validates and builds a configuration with the default step bounds.
    pub fn new(
        rho: f64,
        aperture: f64,
        sensor_dist: f64,
        pixel_pitch: f64,
        delta_rho: f64,
        delta_a: f64,
    ) -> Result<Self> {
        OpticalConfig {
            rho,
            aperture,
            sensor_dist,
            pixel_pitch,
            delta_rho,
            delta_a,
            ..Default::default()
        }
        .validated()
    }

    /// Checks every invariant, returning the config unchanged on success.
    pub fn validated(self) -> Result<Self> {
        let fields = [
            ("rho", self.rho),
            ("A", self.aperture),
            ("Z_s", self.sensor_dist),
            ("pixel_pitch", self.pixel_pitch),
            ("delta_rho", self.delta_rho),
            ("delta_A", self.delta_a),
            ("delta_rho_max", self.delta_rho_max),
            ("delta_A_max", self.delta_a_max),
        ];
        for (k, v) in fields {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{k} must be finite")));
            }
        }
        for (k, v) in [
            ("A", self.aperture),
            ("Z_s", self.sensor_dist),
            ("pixel_pitch", self.pixel_pitch),
            ("delta_rho_max", self.delta_rho_max),
            ("delta_A_max", self.delta_a_max),
        ] {
            if v <= 0.0 {
                return Err(Error::Parameter(format!("{k} must be positive, got {v}")));
            }
        }
        if !(self.delta_rho > 0.0 && self.delta_rho <= self.delta_rho_max) {
            return Err(Error::Parameter(format!(
                "delta_rho {} outside (0, {}]",
                self.delta_rho, self.delta_rho_max
            )));
        }
        if !(self.delta_a > 0.0 && self.delta_a <= self.delta_a_max) {
            return Err(Error::Parameter(format!(
                "delta_A {} outside (0, {}]",
                self.delta_a, self.delta_a_max
            )));
        }
        Ok(self)
    }

    /// Copy with different differentiation steps, revalidated.
    pub fn with_steps(&self, delta_rho: f64, delta_a: f64) -> Result<Self> {
        OpticalConfig {
            delta_rho,
            delta_a,
            ..*self
        }
        .validated()
    }

    /// Depth in meters that is in focus: 1/Z = ρ − 1/Z_s.
    pub fn focus_depth(&self) -> f64 {
        self.sensor_dist / (self.sensor_dist * self.rho - 1.0)
    }

    /// Canonical text form; parsing it back yields a bit-identical config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rho = {:?}dpt", self.rho);
        let _ = writeln!(s, "A = {:?}m", self.aperture);
        let _ = writeln!(s, "Z_s = {:?}m", self.sensor_dist);
        let _ = writeln!(s, "pixel_pitch = {:?}m", self.pixel_pitch);
        let _ = writeln!(s, "delta_rho = {:?}dpt", self.delta_rho);
        let _ = writeln!(s, "delta_A = {:?}m", self.delta_a);
        let _ = writeln!(s, "delta_rho_max = {:?}dpt", self.delta_rho_max);
        let _ = writeln!(s, "delta_A_max = {:?}m", self.delta_a_max);
        s
    }

    /// Parses `key = value` lines. Missing keys keep their defaults;
    /// `#` starts a comment; unknown keys are rejected.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Parse(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            let v = parse_quantity(v)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            values.insert(k.to_string(), v);
        }
        let d = OpticalConfig::default();
        let get = |k: &str, dflt: f64| values.get(k).copied().unwrap_or(dflt);
        OpticalConfig {
            rho: get("rho", d.rho),
            aperture: get("A", d.aperture),
            sensor_dist: get("Z_s", d.sensor_dist),
            pixel_pitch: get("pixel_pitch", d.pixel_pitch),
            delta_rho: get("delta_rho", d.delta_rho),
            delta_a: get("delta_A", d.delta_a),
            delta_rho_max: get("delta_rho_max", d.delta_rho_max),
            delta_a_max: get("delta_A_max", d.delta_a_max),
        }
        .validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::image::write_all(path, self.to_text().as_bytes())
    }

    /// Short hash identifying the optical constants a LUT depends on.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in [
            self.rho,
            self.aperture,
            self.sensor_dist,
            self.delta_rho,
            self.delta_a,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
