//! Simulation studies: derivative SNR, MAE and working range, confidence
//! sparsification, aperture profiles, step selection and window size.
//!
//! Studies are deterministic in (seed, config): cells run in parallel but
//! draw noise from per-cell seeds and are reduced in a fixed order.

pub mod aperture;
pub mod dataset;
pub mod snr;
pub mod sparsify;
pub mod steps;
pub mod sweep;
pub mod window;

pub use aperture::{
    aperture_study, derivative_kernel, derivative_spectrum, ApertureStudy, DerivativeSpectrum, DEFAULT_SPECTRUM_DEPTH,
    SPECTRUM_SIZE,
};
pub use dataset::{
    log_space, study_textures, Cell, Dataset, DEFAULT_DEPTH_COUNT, DEFAULT_DEPTH_RANGE, DEFAULT_TEXTURE_COUNT, FULL_SCALE,
    TEXTURE_SIZE,
};
pub use snr::{snr_study, SnrCurve};
pub use sparsify::{sparsification_study, sparsity_grid, SparsificationPoint};
pub use sparsify::{to_csv as sparsification_csv, CSV_HEADER as SPARSIFICATION_CSV_HEADER};
pub use steps::{optimize_steps, step_objective, StepSearch, DEFAULT_GRID, DEFAULT_STEP_SPARSITY, GRID_FLOOR};
pub use sweep::{
    estimate_cells, mae_sweep, resolve_threshold, summarize, working_range, DepthSweepResult, EstimatorKind,
    EstimatorSpec, Threshold, WorkingRange, DEFAULT_LUT_DEPTHS, WORKING_RANGE_REL,
};
pub use window::{elbow, window_elbow, WindowStudy, DEFAULT_WINDOWS, ELBOW_FRACTION};
