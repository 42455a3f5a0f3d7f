//! Aggregation-window study and elbow detection.

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::dataset::Dataset;
use super::sweep::{estimate_cells, resolve_threshold, summarize, EstimatorSpec, Threshold};

pub const DEFAULT_WINDOWS: [usize; 6] = [1, 3, 5, 7, 9, 11];
/// A step whose improvement is below this fraction of the previous step's
/// improvement marks the elbow.
pub const ELBOW_FRACTION: f64 = 0.2;

/// Elbow of a decreasing error curve. With improvements imp_0 = mae_0 and
/// imp_k = mae_{k−1} − mae_k, returns the first window k with
/// imp_{k+1} < [`ELBOW_FRACTION`]·imp_k, or the last window.
pub fn elbow(windows: &[usize], mae: &[f64]) -> Result<usize> {
    if windows.is_empty() || windows.len() != mae.len() {
        return Err(Error::Dimensions("windows and errors must be nonempty and the same length".into()));
    }
    let mut prev = mae[0];
    for k in 0..windows.len() - 1 {
        let next = mae[k] - mae[k + 1];
        if next < ELBOW_FRACTION * prev {
            return Ok(windows[k]);
        }
        prev = next;
    }
    Ok(*windows.last().expect("nonempty"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStudy {
    pub windows: Vec<usize>,
    pub mae: Vec<f64>,
    pub elbow: usize,
}

impl WindowStudy {
    pub const CSV_HEADER: &'static str = "window,mae_m";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (w, m) in self.windows.iter().zip(&self.mae) {
            let _ = writeln!(s, "{w},{m:.6e}");
        }
        s
    }
}

/// Overall MAE per window on the same captures (evaluated over the border
/// of the largest window), and the elbow window.
pub fn window_elbow(ds: &Dataset, spec: &EstimatorSpec, windows: &[usize], threshold: Threshold) -> Result<WindowStudy> {
    if windows.is_empty() || windows.windows(2).any(|w| w[1] <= w[0]) || windows.iter().any(|w| w % 2 == 0) {
        return Err(Error::Parameter("windows must be odd and increasing".into()));
    }
    let border = windows[windows.len() - 1] / 2 + 1;
    let mut mae = Vec::with_capacity(windows.len());
    for &w in windows {
        let s = EstimatorSpec {
            window: w,
            eval_border: border,
            ..spec.clone()
        };
        let cells = estimate_cells(ds, &s)?;
        let c = resolve_threshold(&cells, threshold)?;
        mae.push(summarize(ds, &cells, c, s.kind.name()).overall_mae());
    }
    let elbow = elbow(windows, &mae)?;
    Ok(WindowStudy {
        windows: windows.to_vec(),
        mae,
        elbow,
    })
}
