//! Precomputed bilinear warp tables for geometric alignment.

use std::path::Path;

use crate::calibration::magnification::{pixel_correspondence, MagnificationModel};
use crate::error::{Error, Result};
use crate::image::Image2D;

const MAGIC: &[u8; 8] = b"CDWARP01";

/// Per output pixel: four source indices and bilinear weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpTable {
    width: usize,
    height: usize,
    indices: Vec<[u32; 4]>,
    weights: Vec<[f32; 4]>,
    in_field: Vec<bool>,
}

impl WarpTable {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn indices(&self) -> &[[u32; 4]] {
        &self.indices
    }

    pub fn weights(&self) -> &[[f32; 4]] {
        &self.weights
    }

    pub fn in_field(&self) -> &[bool] {
        &self.in_field
    }

    /// Table that samples the source at `source(x, y)` for each output pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut source: impl FnMut(usize, usize) -> Result<[f64; 2]>,
    ) -> Result<WarpTable> {
        let mut indices = Vec::with_capacity(width * height);
        let mut weights = Vec::with_capacity(width * height);
        let mut in_field = Vec::with_capacity(width * height);
        let (wmax, hmax) = (width as f64 - 1.0, height as f64 - 1.0);
        for y in 0..height {
            for x in 0..width {
                let [u, v] = source(x, y)?;
                if !(u >= -1e-9 && v >= -1e-9 && u <= wmax + 1e-9 && v <= hmax + 1e-9) {
                    indices.push([0; 4]);
                    weights.push([1.0, 0.0, 0.0, 0.0]);
                    in_field.push(false);
                    continue;
                }
                let u = u.clamp(0.0, wmax);
                let v = v.clamp(0.0, hmax);
                let x0 = (u.floor() as usize).min(width - 1);
                let y0 = (v.floor() as usize).min(height - 1);
                let x1 = (x0 + 1).min(width - 1);
                let y1 = (y0 + 1).min(height - 1);
                let fx = (u - x0 as f64) as f32;
                let fy = (v - y0 as f64) as f32;
                let idx = |xx: usize, yy: usize| (yy * width + xx) as u32;
                indices.push([idx(x0, y0), idx(x1, y0), idx(x0, y1), idx(x1, y1)]);
                weights.push([(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy]);
                in_field.push(true);
            }
        }
        Ok(WarpTable { width, height, indices, weights, in_field })
    }

    /// Binary form: magic, u32 width, u32 height, then per pixel four u32
    /// indices, four f32 weights and a u8 in-field flag, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.indices.len() * 33);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for ((idx, w), f) in self.indices.iter().zip(&self.weights).zip(&self.in_field) {
            for i in idx {
                out.extend_from_slice(&i.to_le_bytes());
            }
            for x in w {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out.push(*f as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<WarpTable> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::Parse("not a warp table".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let width = u32_at(8) as usize;
        let height = u32_at(12) as usize;
        let n = width * height;
        if bytes.len() != 16 + n * 33 {
            return Err(Error::Parse("warp table length mismatch".into()));
        }
        let mut t = WarpTable {
            width,
            height,
            indices: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            in_field: Vec::with_capacity(n),
        };
        for p in 0..n {
            let base = 16 + p * 33;
            let idx = [u32_at(base), u32_at(base + 4), u32_at(base + 8), u32_at(base + 12)];
            if idx.iter().any(|&i| i as usize >= n) {
                return Err(Error::Parse("warp index out of bounds".into()));
            }
            let f = |k: usize| f32::from_le_bytes(bytes[base + 16 + 4 * k..base + 20 + 4 * k].try_into().unwrap());
            t.indices.push(idx);
            t.weights.push([f(0), f(1), f(2), f(3)]);
            t.in_field.push(bytes[base + 32] != 0);
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::image::write_all(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<WarpTable> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Table that resamples an image captured at `rho_src` into the geometry
/// of `rho_dst`.
pub fn build_warp(model: &MagnificationModel, rho_src: f64, rho_dst: f64, dims: (usize, usize)) -> Result<WarpTable> {
    WarpTable::from_fn(dims.0, dims.1, |x, y| {
        pixel_correspondence(model, rho_dst, rho_src, [x as f64, y as f64])
    })
}

/// Four-tap weighted gather (4 multiplies, 3 adds per pixel). Out-of-field
/// pixels become 0.
pub fn apply_warp(image: &Image2D, table: &WarpTable) -> Result<Image2D> {
    if image.dims() != table.dims() {
        return Err(Error::Dimensions(format!(
            "warp table {:?} vs image {:?}",
            table.dims(),
            image.dims()
        )));
    }
    let src = image.data();
    let data = table
        .indices
        .iter()
        .zip(&table.weights)
        .zip(&table.in_field)
        .map(|((i, w), &ok)| {
            if !ok {
                return 0.0;
            }
            w[0] as f64 * src[i[0] as usize]
                + w[1] as f64 * src[i[1] as usize]
                + w[2] as f64 * src[i[2] as usize]
                + w[3] as f64 * src[i[3] as usize]
        })
        .collect();
    Image2D::new(image.width(), image.height(), data)
}
