//! Grid search for the finite-difference steps (Δρ, ΔA).

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::dataset::{log_space, Dataset};
use super::sweep::{estimate_cells_with, resolve_threshold, EstimatorSpec, Threshold};

/// Default grid: 16 Δρ values by 8 ΔA values.
pub const DEFAULT_GRID: (usize, usize) = (16, 8);
/// Smallest grid value as a fraction of the bound, per axis.
pub const GRID_FLOOR: (f64, f64) = (1e-3, 1e-2);
/// Sparsity at which the objective is evaluated.
pub const DEFAULT_STEP_SPARSITY: f64 = 0.5;

/// Objective surface and its minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSearch {
    pub rho_steps: Vec<f64>,
    pub a_steps: Vec<f64>,
    /// objective[i][j] at (rho_steps[i], a_steps[j]).
    pub objective: Vec<Vec<f64>>,
    pub best: (f64, f64),
}

impl StepSearch {
    pub const CSV_HEADER: &'static str = "delta_rho_dpt,delta_a_m,objective_m";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (i, dr) in self.rho_steps.iter().enumerate() {
            for (j, da) in self.a_steps.iter().enumerate() {
                let _ = writeln!(s, "{dr:.6e},{da:.6e},{:.6e}", self.objective[i][j]);
            }
        }
        s
    }
}

/// Mean |Z − Z_true| over the pixels kept at `sparsity`, for captures at
/// steps (Δρ, ΔA). The kept count is fixed by the sparsity, so the mean
/// ranks step pairs exactly as the summed error does.
pub fn step_objective(ds: &Dataset, spec: &EstimatorSpec, delta_rho: f64, delta_a: f64, sparsity: f64) -> Result<f64> {
    let config = ds.config.with_steps(delta_rho, delta_a)?;
    let cells = estimate_cells_with(ds, spec, &config)?;
    let c = resolve_threshold(&cells, Threshold::Sparsity(sparsity))?;
    let (mut sum, mut n) = (0.0, 0usize);
    for cell in &cells {
        let truth = ds.depths[cell.cell.depth];
        for &(conf, z) in &cell.samples {
            if conf > c {
                sum += (z - truth).abs();
                n += 1;
            }
        }
    }
    Ok(if n > 0 { sum / n as f64 } else { f64::INFINITY })
}

/// Log-spaced grid search over (0, Δρ_m] x (0, ΔA_m].
pub fn optimize_steps(
    ds: &Dataset,
    spec: &EstimatorSpec,
    bounds: (f64, f64),
    grid: (usize, usize),
    sparsity: f64,
) -> Result<StepSearch> {
    let (rm, am) = bounds;
    if !(rm > 0.0 && am > 0.0) {
        return Err(Error::Parameter("step bounds must be positive".into()));
    }
    if am >= ds.config.aperture {
        return Err(Error::Domain(format!(
            "aperture step bound {am} m reaches the aperture radius {} m",
            ds.config.aperture
        )));
    }
    let rho_steps = log_space(rm * GRID_FLOOR.0, rm, grid.0)?;
    let a_steps = log_space(am * GRID_FLOOR.1, am, grid.1)?;
    let mut objective = Vec::with_capacity(rho_steps.len());
    let mut best = (f64::INFINITY, (rho_steps[0], a_steps[0]));
    for &dr in &rho_steps {
        let mut row = Vec::with_capacity(a_steps.len());
        for &da in &a_steps {
            let v = step_objective(ds, spec, dr, da, sparsity)?;
            if v < best.0 {
                best = (v, (dr, da));
            }
            row.push(v);
        }
        objective.push(row);
    }
    Ok(StepSearch {
        rho_steps,
        a_steps,
        objective,
        best: best.1,
    })
}
