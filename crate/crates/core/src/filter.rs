//! Spatial filters: separable box sums, convolution, the 5-point Laplacian.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image2D;

/// Kernels wider than this (in either dimension) are convolved via FFT.
pub const DIRECT_CONV_MAX: usize = 15;

/// Sum over a `dim`x`dim` window centered at each pixel, truncated at the
/// borders. Two running-sum passes.
pub fn box_sum(img: &Image2D, dim: usize) -> Result<Image2D> {
    check_odd(dim)?;
    let (w, h) = img.dims();
    let r = dim / 2;
    let mut rows = vec![0.0; w * h];
    let mut prefix = vec![0.0; w.max(h) + 1];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x];
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            rows[y * w + x] = prefix[hi] - prefix[lo];
        }
    }
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + rows[y * w + x];
        }
        for y in 0..h {
            let lo = y.saturating_sub(r);
            let hi = (y + r + 1).min(h);
            out[y * w + x] = prefix[hi] - prefix[lo];
        }
    }
    Ok(Image2D::from_vec_unchecked(w, h, out))
}

/// Number of in-bounds pixels in each truncated `dim`x`dim` window.
pub fn box_count(w: usize, h: usize, dim: usize) -> Vec<f64> {
    let r = dim / 2;
    let span = |i: usize, n: usize| ((i + r + 1).min(n) - i.saturating_sub(r)) as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(span(x, w) * span(y, h));
        }
    }
    out
}

/// Window mean with border-truncated normalization.
pub fn box_mean(img: &Image2D, dim: usize) -> Result<Image2D> {
    let s = box_sum(img, dim)?;
    let n = box_count(img.width(), img.height(), dim);
    Ok(Image2D::from_vec_unchecked(
        img.width(),
        img.height(),
        s.data().iter().zip(&n).map(|(v, c)| v / c).collect(),
    ))
}

fn check_odd(dim: usize) -> Result<()> {
    if dim == 0 || dim % 2 == 0 {
        return Err(Error::Parameter(format!("window dimension must be odd and positive, got {dim}")));
    }
    Ok(())
}

/// Valid-region convolution: output is `(W-kw+1)`x`(H-kh+1)`. Chooses the
/// direct or frequency-domain path by kernel size.
pub fn convolve_valid(img: &Image2D, kernel: &Image2D) -> Result<Image2D> {
    if kernel.width() > DIRECT_CONV_MAX || kernel.height() > DIRECT_CONV_MAX {
        convolve_valid_fft(img, kernel)
    } else {
        convolve_valid_direct(img, kernel)
    }
}

fn valid_dims(img: &Image2D, kernel: &Image2D) -> Result<(usize, usize)> {
    if kernel.is_empty() || kernel.width() > img.width() || kernel.height() > img.height() {
        return Err(Error::Dimensions(format!(
            "kernel {}x{} does not fit image {}x{}",
            kernel.width(),
            kernel.height(),
            img.width(),
            img.height()
        )));
    }
    Ok((img.width() - kernel.width() + 1, img.height() - kernel.height() + 1))
}

/// Direct valid-region convolution.
pub fn convolve_valid_direct(img: &Image2D, kernel: &Image2D) -> Result<Image2D> {
    let (ow, oh) = valid_dims(img, kernel)?;
    let (kw, kh) = kernel.dims();
    let iw = img.width();
    let src = img.data();
    let k = kernel.data();
    let mut out = vec![0.0; ow * oh];
    for oy in 0..oh {
        for ox in 0..ow {
            let mut acc = 0.0;
            for ky in 0..kh {
                let row = (oy + kh - 1 - ky) * iw + ox + kw - 1;
                let krow = &k[ky * kw..(ky + 1) * kw];
                for (kx, &kv) in krow.iter().enumerate() {
                    acc += kv * src[row - kx];
                }
            }
            out[oy * ow + ox] = acc;
        }
    }
    Ok(Image2D::from_vec_unchecked(ow, oh, out))
}

fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn fft2(buf: &mut [Complex<f64>], w: usize, h: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let row_fft = if inverse { planner.plan_fft_inverse(w) } else { planner.plan_fft_forward(w) };
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(h) } else { planner.plan_fft_forward(h) };
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
}

/// Frequency-domain valid-region convolution. Circular convolution on a
/// grid at least as large as the image leaves the valid region exact.
pub fn convolve_valid_fft(img: &Image2D, kernel: &Image2D) -> Result<Image2D> {
    let (ow, oh) = valid_dims(img, kernel)?;
    let (iw, ih) = img.dims();
    let (kw, kh) = kernel.dims();
    let (fw, fh) = (fast_len(iw), fast_len(ih));
    let mut planner = FftPlanner::new();
    let mut a = vec![Complex::new(0.0, 0.0); fw * fh];
    for y in 0..ih {
        for x in 0..iw {
            a[y * fw + x].re = img.get(x, y);
        }
    }
    let mut b = vec![Complex::new(0.0, 0.0); fw * fh];
    for y in 0..kh {
        for x in 0..kw {
            b[y * fw + x].re = kernel.get(x, y);
        }
    }
    fft2(&mut a, fw, fh, false, &mut planner);
    fft2(&mut b, fw, fh, false, &mut planner);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    fft2(&mut a, fw, fh, true, &mut planner);
    let scale = 1.0 / (fw * fh) as f64;
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            out.push(a[(y + kh - 1) * fw + x + kw - 1].re * scale);
        }
    }
    Ok(Image2D::from_vec_unchecked(ow, oh, out))
}

/// 5-point Laplacian stencil in pixel units, borders by edge replication.
pub fn laplacian5(img: &Image2D) -> Image2D {
    let (w, h) = img.dims();
    Image2D::from_fn(w, h, |x, y| {
        let c = img.get(x, y);
        let l = img.get(x.saturating_sub(1), y);
        let r = img.get((x + 1).min(w - 1), y);
        let u = img.get(x, y.saturating_sub(1));
        let d = img.get(x, (y + 1).min(h - 1));
        l + r + u + d - 4.0 * c
    })
}

/// Radially averaged amplitude spectrum of a (zero-padded) square-ish image,
/// in `bins` integer-frequency rings from 1 to the Nyquist radius. Returns
/// `(frequency in cycles/pixel, mean amplitude)` pairs.
pub fn radial_amplitude_spectrum(img: &Image2D, size: usize) -> Vec<(f64, f64)> {
    let n = size.max(img.width()).max(img.height());
    let mut planner = FftPlanner::new();
    let mut buf = vec![Complex::new(0.0, 0.0); n * n];
    for y in 0..img.height() {
        for x in 0..img.width() {
            buf[y * n + x].re = img.get(x, y);
        }
    }
    fft2(&mut buf, n, n, false, &mut planner);
    let half = n / 2;
    let mut sums = vec![0.0; half + 1];
    let mut counts = vec![0usize; half + 1];
    for y in 0..n {
        let fy = if y <= half { y as f64 } else { y as f64 - n as f64 };
        for x in 0..n {
            let fx = if x <= half { x as f64 } else { x as f64 - n as f64 };
            let r = (fx * fx + fy * fy).sqrt().round() as usize;
            if (1..=half).contains(&r) {
                sums[r] += buf[y * n + x].norm();
                counts[r] += 1;
            }
        }
    }
    (1..=half)
        .filter(|&r| counts[r] > 0)
        .map(|r| (r as f64 / n as f64, sums[r] / counts[r] as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pseudo(w: usize, h: usize, seed: u64) -> Image2D {
        let mut s = seed | 1;
        Image2D::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s % 1000) as f64 / 1000.0
        })
    }

    #[test]
    fn box_sum_matches_brute_force() {
        let img = pseudo(9, 7, 3);
        let b = box_sum(&img, 5).unwrap();
        for y in 0..7i64 {
            for x in 0..9i64 {
                let mut s = 0.0;
                for yy in (y - 2).max(0)..=(y + 2).min(6) {
                    for xx in (x - 2).max(0)..=(x + 2).min(8) {
                        s += img.get(xx as usize, yy as usize);
                    }
                }
                assert!((b.get(x as usize, y as usize) - s).abs() < 1e-12);
            }
        }
        assert!(box_sum(&img, 4).is_err());
    }

    #[test]
    fn box_mean_of_constant_is_constant() {
        let m = box_mean(&Image2D::filled(30, 25, 3.5), 21).unwrap();
        assert!(m.data().iter().all(|v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn fft_and_direct_agree() {
        let img = pseudo(64, 50, 11);
        for k in [3usize, 9, 17, 31] {
            let kernel = pseudo(k, k, k as u64);
            let a = convolve_valid_direct(&img, &kernel).unwrap();
            let b = convolve_valid_fft(&img, &kernel).unwrap();
            let scale = a.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (p, q) in a.data().iter().zip(b.data()) {
                assert!((p - q).abs() <= 1e-9 * scale, "k={k}");
            }
        }
    }

    #[test]
    fn convolution_flips_the_kernel() {
        let img = Image2D::from_fn(5, 1, |x, _| if x == 2 { 1.0 } else { 0.0 });
        let kernel = Image2D::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let out = convolve_valid_direct(&img, &kernel).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn laplacian_of_quadratic() {
        let img = Image2D::from_fn(7, 7, |x, y| (x * x + 2 * y * y) as f64);
        assert!((laplacian5(&img).get(3, 3) - 6.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn box_sum_is_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
            let a = pseudo(12, 10, seed);
            let s1 = box_sum(&a.map(|v| c * v), 3).unwrap();
            let s2 = box_sum(&a, 3).unwrap().map(|v| c * v);
            for (p, q) in s1.data().iter().zip(s2.data()) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
