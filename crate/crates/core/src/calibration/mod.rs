//! Calibration: magnification model and warp tables, noise level, point
//! centers and the data-driven depth LUT.

pub mod centroid;
pub mod lut_build;
pub mod magnification;
pub mod noise;
pub mod warp;

pub use centroid::{weighted_centroid, CENTROID_THRESHOLD};
pub use lut_build::{build_lut, LutBuild, LUT_CONFIDENCE_FLOOR};
pub use magnification::{fit_magnification, pixel_correspondence, MagnificationFit, MagnificationModel, PointObservation};
pub use noise::{calibrate_noise, NoiseCalibration, NoiseEstimate};
pub use warp::{apply_warp, build_warp, WarpTable};
