//! Row-major real-valued image container and PGM interchange.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Grayscale image with real-valued samples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image2D {
    /// Builds an image, rejecting length mismatches and non-finite samples.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimensions(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite sample at ({}, {})",
                i % width.max(1),
                i / width.max(1)
            )));
        }
        Ok(Image2D { width, height, data })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Image2D {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    /// Builds an image from `f(x, y)`. Panics on non-finite output.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                assert!(v.is_finite(), "non-finite sample at ({x}, {y})");
                data.push(v);
            }
        }
        Image2D { width, height, data }
    }

    /// Wraps data already known to be finite; used by internal kernels.
    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image2D { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Image2D) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_same_dims(&self, other: &Image2D, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::Dimensions(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image2D {
        Image2D::from_vec_unchecked(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Combines two equally sized images sample by sample.
    pub fn zip_map(&self, other: &Image2D, f: impl Fn(f64, f64) -> f64) -> Result<Image2D> {
        self.check_same_dims(other, "zip_map")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Image2D::new(self.width, self.height, data)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image2D> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Dimensions(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Image2D::from_vec_unchecked(w, h, data))
    }

    /// Rounds and clamps every sample to the 16-bit range.
    pub fn quantize16(&self) -> Image2D {
        self.map(|v| v.round().clamp(0.0, 65535.0))
    }

    /// Reads a binary (P5) PGM with 8- or 16-bit samples.
    pub fn read_pgm(path: &Path) -> Result<Image2D> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        Self::decode_pgm(&mut reader).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Decodes a P5 PGM stream.
    pub fn decode_pgm(reader: &mut impl BufRead) -> Result<Image2D> {
        let magic = next_token(reader)?;
        if magic != "P5" {
            return Err(Error::Parse(format!("expected P5 magic, found '{magic}'")));
        }
        let width = parse_header_int(&next_token(reader)?)?;
        let height = parse_header_int(&next_token(reader)?)?;
        let maxval = parse_header_int(&next_token(reader)?)?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("invalid maxval {maxval}")));
        }
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let mut raw = vec![0u8; width * height * bytes_per];
        reader
            .read_exact(&mut raw)
            .map_err(|_| Error::Parse("truncated PGM sample data".into()))?;
        let data = if bytes_per == 1 {
            raw.iter().map(|&b| b as f64).collect()
        } else {
            raw.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64)
                .collect()
        };
        Ok(Image2D::from_vec_unchecked(width, height, data))
    }

    /// Writes a 16-bit big-endian P5 PGM (maxval 65535), rounding and clamping.
    pub fn write_pgm16(&self, path: &Path) -> Result<()> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 2);
        for &v in &self.data {
            let s = v.round().clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&s.to_be_bytes());
        }
        write_all(path, &out)
    }
}

/// Writes an 8-bit P5 PGM from byte samples (used for validity masks).
pub fn write_pgm8(path: &Path, width: usize, height: usize, samples: &[u8]) -> Result<()> {
    if samples.len() != width * height {
        return Err(Error::Dimensions("mask length mismatch".into()));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    write_all(path, &out)
}

pub(crate) fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn next_token(reader: &mut impl BufRead) -> Result<String> {
    let mut token = String::new();
    loop {
        let mut byte = [0u8; 1];
        if reader.read(&mut byte).map_err(|e| Error::Parse(e.to_string()))? == 0 {
            if token.is_empty() {
                return Err(Error::Parse("unexpected end of PGM header".into()));
            }
            return Ok(token);
        }
        let c = byte[0] as char;
        if c == '#' && token.is_empty() {
            let mut skip = Vec::new();
            reader
                .read_until(b'\n', &mut skip)
                .map_err(|e| Error::Parse(e.to_string()))?;
        } else if c.is_ascii_whitespace() {
            if !token.is_empty() {
                return Ok(token);
            }
        } else {
            token.push(c);
        }
    }
}

fn parse_header_int(t: &str) -> Result<usize> {
    t.parse()
        .map_err(|_| Error::Parse(format!("bad PGM header field '{t}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(Image2D::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image2D::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn crop_copies_window() {
        let img = Image2D::from_fn(4, 3, |x, y| (10 * y + x) as f64);
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data(), &[11.0, 12.0, 21.0, 22.0]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }

    #[test]
    fn decodes_8bit_with_comment() {
        let bytes = b"P5\n# comment\n2 1\n255\n\x07\xff".to_vec();
        let img = Image2D::decode_pgm(&mut &bytes[..]).unwrap();
        assert_eq!(img.data(), &[7.0, 255.0]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        Image2D::new(2, 1, vec![258.0, 65535.0]).unwrap().write_pgm16(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[1, 2, 255, 255]);
    }

    proptest! {
        #[test]
        fn pgm16_roundtrip_is_lossless(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let mut s = seed;
            let img = Image2D::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 48) as f64
            });
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("r.pgm");
            img.write_pgm16(&p).unwrap();
            prop_assert_eq!(Image2D::read_pgm(&p).unwrap(), img);
        }
    }
}
