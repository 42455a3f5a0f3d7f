//! Depth from coupled optical differentiation: a simulator for the
//! four-image capture, closed-form and LUT depth estimators, calibration,
//! and the analysis studies.

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod error;
pub mod estimator;
pub mod filter;
pub mod image;
pub mod io;
pub mod optics;
pub mod rng;
pub mod units;

pub use config::OpticalConfig;
pub use error::{Error, Result};
pub use image::Image2D;
