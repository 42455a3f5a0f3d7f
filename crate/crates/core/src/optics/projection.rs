//! All-in-focus perspective image P(x, y) = T(−(Z/Z_s)x, −(Z/Z_s)y).

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::optics::texture::SceneTexture;

/// Projects a fronto-parallel texture at depth `z` onto a `dims` sensor of
/// the given pitch, centered on the optical axis, by bilinear resampling.
pub fn pinhole_project(
    texture: &SceneTexture,
    z: f64,
    sensor_dist: f64,
    pitch: f64,
    dims: (usize, usize),
) -> Result<Image2D> {
    if !(z > 0.0 && sensor_dist > 0.0 && pitch > 0.0) {
        return Err(Error::Domain("depth, sensor distance and pitch must be positive".into()));
    }
    let (w, h) = dims;
    let tex = &texture.image;
    let (tw, th) = tex.dims();
    let k = -(z / sensor_dist) * pitch / texture.physical_scale;
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (tcx, tcy) = ((tw as f64 - 1.0) / 2.0, (th as f64 - 1.0) / 2.0);
    let reach_x = k.abs() * cx;
    let reach_y = k.abs() * cy;
    if reach_x > tcx + 1e-9 || reach_y > tcy + 1e-9 {
        return Err(Error::Domain(format!(
            "field of view at Z = {z} m needs {:.1}x{:.1} texels, texture is {tw}x{th}",
            2.0 * reach_x + 1.0,
            2.0 * reach_y + 1.0
        )));
    }
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let v = (tcy + k * (y as f64 - cy)).clamp(0.0, th as f64 - 1.0);
        for x in 0..w {
            let u = (tcx + k * (x as f64 - cx)).clamp(0.0, tw as f64 - 1.0);
            data.push(bilinear(tex, u, v));
        }
    }
    Ok(Image2D::from_vec_unchecked(w, h, data))
}

/// Bilinear sample at in-bounds real coordinates.
pub fn bilinear(img: &Image2D, u: f64, v: f64) -> f64 {
    let (w, h) = img.dims();
    let x0 = (u.floor() as usize).min(w - 1);
    let y0 = (v.floor() as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = u - x0 as f64;
    let fy = v - y0 as f64;
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bot = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    top * (1.0 - fy) + bot * fy
}
