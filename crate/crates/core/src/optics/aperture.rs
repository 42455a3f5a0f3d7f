//! Parametric aperture transmittance profiles
//! κ(x, y; m, n) = Σ_i exp(−(((x−x_i)² + (y−y_i)²) / (2σ_i²))^{m/2}).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Named presets plus a free-form family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Gaussian,
    Pillbox,
    SmoothDisk,
    MultiPillbox,
    Custom,
}

impl ProfileKind {
    pub const PRESETS: [ProfileKind; 4] = [
        ProfileKind::Gaussian,
        ProfileKind::SmoothDisk,
        ProfileKind::Pillbox,
        ProfileKind::MultiPillbox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Pillbox => "pillbox",
            ProfileKind::SmoothDisk => "smooth-disk",
            ProfileKind::MultiPillbox => "multi-pillbox",
            ProfileKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<ProfileKind> {
        match s {
            "gaussian" => Ok(ProfileKind::Gaussian),
            "pillbox" => Ok(ProfileKind::Pillbox),
            "smooth-disk" | "smooth_disk" => Ok(ProfileKind::SmoothDisk),
            "multi-pillbox" | "multi_pillbox" => Ok(ProfileKind::MultiPillbox),
            other => Err(Error::Parameter(format!("unknown aperture profile '{other}'"))),
        }
    }
}

/// Aperture profile in normalized aperture coordinates; the disk presets
/// have their edge at radius 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureProfile {
    kind: ProfileKind,
    m: f64,
    centers: Vec<(f64, f64)>,
    sigmas: Vec<f64>,
}

/// Profile values below this are treated as outside the support.
const SUPPORT_EPS: f64 = 1e-12;

/// Builds a profile. For named kinds `m`, `centers` and `sigmas` may be
/// `None` to take the preset values.
pub fn make_aperture(
    kind: ProfileKind,
    m: Option<f64>,
    centers: Option<Vec<(f64, f64)>>,
    sigmas: Option<Vec<f64>>,
) -> Result<ApertureProfile> {
    let half = 0.5 * FRAC_1_SQRT_2;
    let (pm, pc, ps): (f64, Vec<(f64, f64)>, Vec<f64>) = match kind {
        ProfileKind::Gaussian => (2.0, vec![(0.0, 0.0)], vec![0.5]),
        ProfileKind::SmoothDisk => (8.0, vec![(0.0, 0.0)], vec![FRAC_1_SQRT_2]),
        ProfileKind::Pillbox => (64.0, vec![(0.0, 0.0)], vec![FRAC_1_SQRT_2]),
        ProfileKind::MultiPillbox => (
            64.0,
            vec![(half, half), (-half, half), (half, -half), (-half, -half)],
            vec![0.3 * FRAC_1_SQRT_2; 4],
        ),
        ProfileKind::Custom => (
            m.ok_or_else(|| Error::Parameter("custom profile needs m".into()))?,
            centers.clone().ok_or_else(|| Error::Parameter("custom profile needs centers".into()))?,
            sigmas.clone().ok_or_else(|| Error::Parameter("custom profile needs sigmas".into()))?,
        ),
    };
    let m = m.unwrap_or(pm);
    let centers = centers.unwrap_or(pc);
    let sigmas = sigmas.unwrap_or(ps);
    ApertureProfile::new(kind, m, centers, sigmas)
}

impl ApertureProfile {
    fn new(kind: ProfileKind, m: f64, centers: Vec<(f64, f64)>, sigmas: Vec<f64>) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Parameter(format!("smoothness m must be positive, got {m}")));
        }
        if centers.is_empty() {
            return Err(Error::Parameter("blob count n must be at least 1".into()));
        }
        if centers.len() != sigmas.len() {
            return Err(Error::Parameter("centers and sigmas differ in length".into()));
        }
        if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Parameter("every sigma must be positive".into()));
        }
        if centers.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Parameter("centers must be finite".into()));
        }
        Ok(ApertureProfile { kind, m, centers, sigmas })
    }

    /// Preset profile by kind.
    pub fn preset(kind: ProfileKind) -> ApertureProfile {
        make_aperture(kind, None, None, None).expect("presets are valid")
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Radius √2·σ_i of the smallest blob, in normalized units; the finest
    /// feature the rasterizer must resolve.
    pub fn feature_radius(&self) -> f64 {
        self.sigmas.iter().fold(f64::INFINITY, |m, &s| m.min(s)) * std::f64::consts::SQRT_2
    }

    /// Evaluates κ at normalized coordinates.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let half_m = 0.5 * self.m;
        self.centers
            .iter()
            .zip(&self.sigmas)
            .map(|(&(cx, cy), &s)| {
                let q = ((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s);
                let p = if half_m == 1.0 { q } else { q.powf(half_m) };
                (-p).exp()
            })
            .sum()
    }

    /// Radius beyond which every blob is below the support threshold.
    pub fn support_radius(&self) -> f64 {
        let k = (1.0 / SUPPORT_EPS).ln().powf(1.0 / self.m);
        self.centers
            .iter()
            .zip(&self.sigmas)
            .map(|(&(cx, cy), &s)| (cx * cx + cy * cy).sqrt() + s * std::f64::consts::SQRT_2 * k)
            .fold(0.0, f64::max)
    }

    /// Per-axis second moment of the normalized profile, E[x²].
    pub fn second_moment(&self) -> f64 {
        let r = self.support_radius();
        let n = 400;
        let h = 2.0 * r / n as f64;
        let (mut mass, mut mom) = (0.0, 0.0);
        for j in 0..n {
            let y = -r + (j as f64 + 0.5) * h;
            for i in 0..n {
                let x = -r + (i as f64 + 0.5) * h;
                let v = self.eval(x, y);
                mass += v;
                mom += v * x * x;
            }
        }
        mom / mass
    }

    /// True when κ(x, y) = κ(−x, −y) for all points.
    pub fn is_centrally_symmetric(&self) -> bool {
        self.centers.iter().zip(&self.sigmas).all(|(&(cx, cy), &s)| {
            (cx == 0.0 && cy == 0.0)
                || self
                    .centers
                    .iter()
                    .zip(&self.sigmas)
                    .any(|(&(dx, dy), &t)| dx == -cx && dy == -cy && t == s)
        })
    }
}
