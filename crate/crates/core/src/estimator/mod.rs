//! Depth from coupled optical derivatives: finite differences, closed-form
//! and windowed least-squares depth, LUT inference, the Focal Track
//! baseline, and the low-FLOP inference kernel.

pub mod depth;
pub mod derivatives;
pub mod focal_track;
pub mod kernel;
pub mod lut;

pub use depth::{
    build_ratio_planes, confidence_threshold, depth_per_pixel, depth_windowed, median, threshold_for_sparsity,
    windowed_confidence, DepthResult, DEFAULT_WINDOW, EPS_DIV,
};
pub use derivatives::{
    derivatives, finite_diff_a, finite_diff_rho, normalize_brightness, remove_background, DerivativePair,
    DEFAULT_BACKGROUND_DIM,
};
pub use focal_track::focal_track_depth;
pub use kernel::{
    count_flopop, infer_lut, lut_kernel, Alignment, Counted, FlopOptions, FlopReport, KernelOptions, KernelScalar,
    OpTally,
};
pub use lut::{depth_via_lut, DepthLut, DEFAULT_BINS};
