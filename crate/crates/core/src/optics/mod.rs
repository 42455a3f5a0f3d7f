//! Ground-truth forward model: aperture profiles, PSFs, projection, image
//! formation, noise and four-image capture.

pub mod aperture;
pub mod capture;
pub mod formation;
pub mod noise;
pub mod projection;
pub mod psf;
pub mod texture;

pub use aperture::{make_aperture, ApertureProfile, ProfileKind};
pub use capture::{capture_images, capture_quad, QuadCapture};
pub use formation::{exposure_psf, form_image, form_images, Exposure};
pub use noise::{add_noise, NoiseModel, PROTOTYPE_LAMBDA};
pub use projection::pinhole_project;
pub use psf::{auto_supersample, blur_scale, blur_scale_at, render_psf, PsfKernel};
pub use texture::{generate_texture, SceneTexture, TextureKind, DEFAULT_TEXEL_SCALE};
