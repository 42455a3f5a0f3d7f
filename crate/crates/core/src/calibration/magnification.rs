//! Affine magnification-shift model x(ρ, x₀) = λ·ρ + ρ·A·x₀ + x₀, with ρ
//! measured relative to the reference power ρ₀ at which x₀ is observed.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Per-diopter magnification matrix and translation, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnificationModel {
    pub a_mat: [[f64; 2]; 2],
    /// Pixels per diopter.
    pub lambda: [f64; 2],
    /// Reference optical power, diopters.
    pub rho0: f64,
}

impl MagnificationModel {
    pub fn identity(rho0: f64) -> Self {
        MagnificationModel {
            a_mat: [[0.0; 2]; 2],
            lambda: [0.0; 2],
            rho0,
        }
    }

    /// Forward model: image position at power `rho` of the point seen at `x0` at ρ₀.
    pub fn position(&self, rho: f64, x0: [f64; 2]) -> [f64; 2] {
        let r = rho - self.rho0;
        let a = &self.a_mat;
        [
            self.lambda[0] * r + r * (a[0][0] * x0[0] + a[0][1] * x0[1]) + x0[0],
            self.lambda[1] * r + r * (a[1][0] * x0[0] + a[1][1] * x0[1]) + x0[1],
        ]
    }

    /// ρA + I at absolute power `rho`.
    fn m(&self, rho: f64) -> [[f64; 2]; 2] {
        let r = rho - self.rho0;
        let a = &self.a_mat;
        [[r * a[0][0] + 1.0, r * a[0][1]], [r * a[1][0], r * a[1][1] + 1.0]]
    }

    /// Text form: six model numbers then ρ₀, one per line.
    pub fn to_text(&self) -> String {
        let a = &self.a_mat;
        format!(
            "# magnification model: a11 a12 a21 a22 lambda_x lambda_y rho0\n{:?}\n{:?}\n{:?}\n{:?}\n{:?}\n{:?}\n{:?}\n",
            a[0][0], a[0][1], a[1][0], a[1][1], self.lambda[0], self.lambda[1], self.rho0
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let nums: Vec<f64> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<f64>().map_err(|_| Error::Parse(format!("bad model value '{l}'"))))
            .collect::<Result<_>>()?;
        if nums.len() != 7 {
            return Err(Error::Parse(format!("model needs 7 numbers, found {}", nums.len())));
        }
        Ok(MagnificationModel {
            a_mat: [[nums[0], nums[1]], [nums[2], nums[3]]],
            lambda: [nums[4], nums[5]],
            rho0: nums[6],
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::image::write_all(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Maps a pixel position observed at ρ₁ to where the same scene point
/// lands at ρ₂: x₂ = (ρ₂A+I)(ρ₁A+I)⁻¹(x₁ − ρ₁λ) + ρ₂λ.
pub fn pixel_correspondence(model: &MagnificationModel, rho1: f64, rho2: f64, x1: [f64; 2]) -> Result<[f64; 2]> {
    let m1 = model.m(rho1);
    let det = m1[0][0] * m1[1][1] - m1[0][1] * m1[1][0];
    if det.abs() < 1e-12 {
        return Err(Error::Numerical(format!("ρA + I is singular at ρ = {rho1}")));
    }
    let (r1, r2) = (rho1 - model.rho0, rho2 - model.rho0);
    let d = [x1[0] - r1 * model.lambda[0], x1[1] - r1 * model.lambda[1]];
    let x0 = [
        (m1[1][1] * d[0] - m1[0][1] * d[1]) / det,
        (-m1[1][0] * d[0] + m1[0][0] * d[1]) / det,
    ];
    let m2 = model.m(rho2);
    Ok([
        m2[0][0] * x0[0] + m2[0][1] * x0[1] + r2 * model.lambda[0],
        m2[1][0] * x0[0] + m2[1][1] * x0[1] + r2 * model.lambda[1],
    ])
}

/// One measured point-source center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointObservation {
    pub point: usize,
    pub rho: f64,
    pub center: [f64; 2],
}

/// Fitted model with its RMS residual in pixels.
#[derive(Debug, Clone, Copy)]
pub struct MagnificationFit {
    pub model: MagnificationModel,
    pub rms: f64,
}

/// Least-squares fit of (A, λ). Each point's x₀ is its measured center at
/// the observed ρ nearest `rho0`.
pub fn fit_magnification(observations: &[PointObservation], rho0: f64) -> Result<MagnificationFit> {
    let mut points: Vec<usize> = observations.iter().map(|o| o.point).collect();
    points.sort_unstable();
    points.dedup();
    let mut rhos: Vec<f64> = observations.iter().map(|o| o.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if points.len() < 3 {
        return Err(Error::Insufficient {
            what: "distinct calibration points".into(),
            expected: 3,
            found: points.len(),
        });
    }
    if rhos.len() < 2 {
        return Err(Error::Insufficient {
            what: "distinct optical powers".into(),
            expected: 2,
            found: rhos.len(),
        });
    }
    let reference = |p: usize| -> [f64; 2] {
        observations
            .iter()
            .filter(|o| o.point == p)
            .min_by(|a, b| {
                (a.rho - rho0)
                    .abs()
                    .total_cmp(&(b.rho - rho0).abs())
                    .then(a.rho.total_cmp(&b.rho))
                    .then(a.center[0].total_cmp(&b.center[0]))
                    .then(a.center[1].total_cmp(&b.center[1]))
            })
            .map(|o| o.center)
            .expect("point has observations")
    };
    let refs: Vec<(usize, [f64; 2])> = points.iter().map(|&p| (p, reference(p))).collect();
    let x0_of = |p: usize| refs[refs.binary_search_by_key(&p, |r| r.0).unwrap()].1;

    let n = observations.len();
    let mut design = DMatrix::<f64>::zeros(2 * n, 6);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (i, o) in observations.iter().enumerate() {
        let x0 = x0_of(o.point);
        let r = o.rho - rho0;
        design[(2 * i, 0)] = r * x0[0];
        design[(2 * i, 1)] = r * x0[1];
        design[(2 * i, 4)] = r;
        design[(2 * i + 1, 2)] = r * x0[0];
        design[(2 * i + 1, 3)] = r * x0[1];
        design[(2 * i + 1, 5)] = r;
        rhs[2 * i] = o.center[0] - x0[0];
        rhs[2 * i + 1] = o.center[1] - x0[1];
    }
    // Column scaling keeps the rank test meaningful when pixel coordinates
    // are large compared to the translation column.
    let scales: Vec<f64> = (0..6).map(|j| design.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = design.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-10 {
        return Err(Error::RankDeficient(
            "observations do not constrain all six parameters (points collinear through the origin, or no ρ offset)".into(),
        ));
    }
    let sol = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let p: Vec<f64> = (0..6).map(|j| sol[j] / scales[j]).collect();
    let model = MagnificationModel {
        a_mat: [[p[0], p[1]], [p[2], p[3]]],
        lambda: [p[4], p[5]],
        rho0,
    };
    let resid = &design * DVector::from_vec(p) - rhs;
    let rms = (resid.norm_squared() / n as f64).sqrt();
    Ok(MagnificationFit { model, rms })
}
