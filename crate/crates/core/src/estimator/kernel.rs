//! Low-FLOP LUT inference kernel over raw captures, with its static
//! per-pixel operation ledger.
//!
//! The kernel is generic over [`KernelScalar`] so it can run on [`Counted`]
//! values, which tally every arithmetic operation and comparison; tests use
//! this to check the ledger against the code.

use std::cell::Cell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};

use crate::calibration::warp::WarpTable;
use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::estimator::depth::{check_window, DepthResult};
use crate::estimator::lut::DepthLut;
use crate::filter::box_count;
use crate::image::Image2D;
use crate::optics::QuadCapture;

/// Arithmetic the kernel may use. `lit` and `value` move constants in and
/// results out and are not operations.
pub trait KernelScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + PartialOrd
{
    fn lit(v: f64) -> Self;
    fn value(self) -> f64;
}

impl KernelScalar for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
}

thread_local! {
    static TALLY: Cell<OpTally> = const { Cell::new(OpTally { adds: 0, subs: 0, muls: 0, divs: 0, cmps: 0 }) };
}

/// Operation counts recorded by [`Counted`] on the current thread.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpTally {
    pub adds: u64,
    pub subs: u64,
    pub muls: u64,
    pub divs: u64,
    pub cmps: u64,
}

impl OpTally {
    pub fn arithmetic(&self) -> u64 {
        self.adds + self.subs + self.muls + self.divs
    }

    pub fn take() -> OpTally {
        TALLY.with(|t| t.replace(OpTally::default()))
    }
}

fn tally(f: impl FnOnce(&mut OpTally)) {
    TALLY.with(|t| {
        let mut v = t.get();
        f(&mut v);
        t.set(v);
    });
}

/// f64 wrapper that counts every operation applied to it.
#[derive(Debug, Clone, Copy)]
pub struct Counted(pub f64);

impl Add for Counted {
    type Output = Counted;
    fn add(self, o: Counted) -> Counted {
        tally(|t| t.adds += 1);
        Counted(self.0 + o.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, o: Counted) -> Counted {
        tally(|t| t.subs += 1);
        Counted(self.0 - o.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, o: Counted) -> Counted {
        tally(|t| t.muls += 1);
        Counted(self.0 * o.0)
    }
}

impl Div for Counted {
    type Output = Counted;
    fn div(self, o: Counted) -> Counted {
        tally(|t| t.divs += 1);
        Counted(self.0 / o.0)
    }
}

impl PartialEq for Counted {
    fn eq(&self, o: &Counted) -> bool {
        tally(|t| t.cmps += 1);
        self.0 == o.0
    }
}

impl PartialOrd for Counted {
    fn partial_cmp(&self, o: &Counted) -> Option<Ordering> {
        tally(|t| t.cmps += 1);
        self.0.partial_cmp(&o.0)
    }
}

impl KernelScalar for Counted {
    fn lit(v: f64) -> Self {
        Counted(v)
    }
    fn value(self) -> f64 {
        self.0
    }
}

/// Kernel options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Background-removal box dimension, if enabled.
    pub background_dim: Option<usize>,
    /// Aggregation window (odd).
    pub window: usize,
    /// Confidence threshold.
    pub c_thre: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            background_dim: Some(crate::estimator::derivatives::DEFAULT_BACKGROUND_DIM),
            window: crate::estimator::depth::DEFAULT_WINDOW,
            c_thre: 0.0,
        }
    }
}

/// Warp tables aligning the ρ+Δρ and ρ−Δρ images to the A± geometry.
#[derive(Debug, Clone, Copy)]
pub struct Alignment<'a> {
    pub plus: &'a WarpTable,
    pub minus: &'a WarpTable,
}

/// Which optional stages a ledger covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopOptions {
    pub background_removal: bool,
    pub alignment: bool,
    pub window: usize,
    pub bins: usize,
}

/// Per-pixel operation ledger of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopReport {
    /// (stage, floating-point operations per output pixel).
    pub items: Vec<(&'static str, u64)>,
    /// Range-check comparisons on the digitized ratio; reported, not part
    /// of the FLOPOP total.
    pub guard_compares: u64,
}

impl FlopReport {
    /// FLOPOP: arithmetic operations plus the confidence comparison.
    pub fn total(&self) -> u64 {
        self.items.iter().map(|i| i.1).sum()
    }

    /// Arithmetic operations only (everything but the confidence compare).
    pub fn arithmetic(&self) -> u64 {
        self.total() - CONFIDENCE_COMPARE
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, n) in &self.items {
            s.push_str(&format!("{name:<44} {n:>3}\n"));
        }
        s.push_str(&format!("{:<44} {:>3}\n", "FLOPOP total", self.total()));
        s.push_str(&format!("{:<44} {:>3}\n", "range guard compares (not counted)", self.guard_compares));
        s
    }
}

const CONFIDENCE_COMPARE: u64 = 1;
const BOX_SUM: u64 = 4;
const WARP_GATHER: u64 = 7;

/// Static per-output-pixel ledger for the kernel under `options`.
pub fn count_flopop(options: &FlopOptions) -> FlopReport {
    let mut items: Vec<(&'static str, u64)> = Vec::new();
    if options.alignment {
        items.push(("alignment: 4-tap gather x 2 images", 2 * WARP_GATHER));
    }
    items.push(("finite difference I_rho", 1));
    items.push(("brightness-normalized difference I_A", 2));
    if options.background_removal {
        items.push(("background removal: box filter + subtract", BOX_SUM + 1 + 1));
    }
    items.push(("coupled residual d", 2));
    if options.window > 1 {
        items.push(("products I_rho*d, d*d, I_rho*I_rho", 3));
        items.push(("box sums num, den, confidence", 3 * BOX_SUM));
    } else {
        items.push(("confidence I_rho*I_rho", 1));
    }
    items.push(("ratio division", 1));
    items.push(("digitization", 2));
    items.push(("confidence compare", CONFIDENCE_COMPARE));
    FlopReport {
        items,
        guard_compares: 2,
    }
}

/// Border-truncated separable box sum: two running-sum passes, one add
/// and one subtract per pixel each.
fn box_sum_generic<T: KernelScalar>(src: &[T], w: usize, h: usize, dim: usize) -> Vec<T> {
    let r = dim / 2;
    let zero = T::lit(0.0);
    let mut rows = vec![zero; w * h];
    let mut prefix = vec![zero; w.max(h) + 1];
    for y in 0..h {
        for x in 0..w {
            prefix[x + 1] = prefix[x] + src[y * w + x];
        }
        for x in 0..w {
            rows[y * w + x] = prefix[(x + r + 1).min(w)] - prefix[x.saturating_sub(r)];
        }
    }
    let mut out = vec![zero; w * h];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + rows[y * w + x];
        }
        for y in 0..h {
            out[y * w + x] = prefix[(y + r + 1).min(h)] - prefix[y.saturating_sub(r)];
        }
    }
    out
}

fn gather<T: KernelScalar>(src: &[T], table: &WarpTable) -> Vec<T> {
    table
        .indices()
        .iter()
        .zip(table.weights())
        .map(|(i, wt)| {
            T::lit(wt[0] as f64) * src[i[0] as usize]
                + T::lit(wt[1] as f64) * src[i[1] as usize]
                + T::lit(wt[2] as f64) * src[i[2] as usize]
                + T::lit(wt[3] as f64) * src[i[3] as usize]
        })
        .collect()
}

/// Raw kernel output.
#[derive(Debug, Clone)]
pub struct KernelOutput<T> {
    pub depth: Vec<f64>,
    pub confidence: Vec<T>,
    pub valid: Vec<bool>,
}

/// Algorithm-1 inference on raw images `[ρ+Δρ, ρ−Δρ, A+ΔA, A−ΔA]`.
pub fn lut_kernel<T: KernelScalar>(
    images: [&[T]; 4],
    dims: (usize, usize),
    config: &OpticalConfig,
    lut: &DepthLut,
    options: &KernelOptions,
    alignment: Option<Alignment<'_>>,
) -> Result<KernelOutput<T>> {
    check_window(options.window)?;
    lut.check_config(config)?;
    let (w, h) = dims;
    let n = w * h;
    if images.iter().any(|i| i.len() != n) {
        return Err(Error::Dimensions("kernel images differ from the declared dimensions".into()));
    }
    if let Some(d) = options.background_dim {
        check_window(d)?;
    }
    let (a, da, dr) = (config.aperture, config.delta_a, config.delta_rho);
    if !(a - da > 0.0) {
        return Err(Error::Domain("aperture step exceeds the aperture".into()));
    }
    let base = config.sensor_dist * config.rho - 1.0;
    let n_plus = (a / (a + da)).powi(2);
    let s = ((a + da) / (a - da)).powi(2);
    let k = a * config.sensor_dist * n_plus * dr / (base * da);
    let dig_scale = 1.0 / (base * lut.ratio_step());
    let dig_offset = lut.r_min / lut.ratio_step();
    let (s_t, k_t, ds_t, do_t) = (T::lit(s), T::lit(k), T::lit(dig_scale), T::lit(dig_offset));
    let bins_t = T::lit(lut.bins() as f64);
    let zero = T::lit(0.0);
    let thre = T::lit(options.c_thre);

    let mut in_field = vec![true; n];
    let (p, m) = match alignment {
        Some(al) => {
            for t in [al.plus, al.minus] {
                if t.dims() != dims {
                    return Err(Error::Dimensions("warp table differs from image dimensions".into()));
                }
                for (f, ok) in in_field.iter_mut().zip(t.in_field()) {
                    *f &= *ok;
                }
            }
            (gather(images[0], al.plus), gather(images[1], al.minus))
        }
        None => (images[0].to_vec(), images[1].to_vec()),
    };
    let i_rho: Vec<T> = p.iter().zip(&m).map(|(&x, &y)| x - y).collect();
    let mut i_a: Vec<T> = images[2].iter().zip(images[3]).map(|(&x, &y)| x - s_t * y).collect();
    if let Some(dim) = options.background_dim {
        let bg = box_sum_generic(&i_a, w, h, dim);
        let counts = box_count(w, h, dim);
        for ((v, b), c) in i_a.iter_mut().zip(&bg).zip(&counts) {
            *v = *v - T::lit(1.0 / c) * *b;
        }
    }
    let d: Vec<T> = i_rho.iter().zip(&i_a).map(|(&r, &x)| r - k_t * x).collect();
    let (num, den, conf) = if options.window > 1 {
        let pr: Vec<T> = i_rho.iter().zip(&d).map(|(&r, &x)| r * x).collect();
        let qd: Vec<T> = d.iter().map(|&x| x * x).collect();
        let e: Vec<T> = i_rho.iter().map(|&r| r * r).collect();
        (
            box_sum_generic(&pr, w, h, options.window),
            box_sum_generic(&qd, w, h, options.window),
            box_sum_generic(&e, w, h, options.window),
        )
    } else {
        let e: Vec<T> = i_rho.iter().map(|&r| r * r).collect();
        (i_rho, d, e)
    };
    let mut depth = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let r = num[i] / den[i];
        let t = r * ds_t - do_t;
        let in_range = (t >= zero) & (t < bins_t);
        let confident = conf[i] > thre;
        let ok = in_range && confident && in_field[i] && r.value().is_finite();
        if ok {
            depth.push(lut.depth_of_bin[(t.value() as usize).min(lut.bins() - 1)]);
        } else {
            depth.push(0.0);
        }
        valid.push(ok);
    }
    Ok(KernelOutput { depth, confidence: conf, valid })
}

/// Runs the kernel in f64 on a capture.
pub fn infer_lut(
    quad: &QuadCapture,
    lut: &DepthLut,
    options: &KernelOptions,
    alignment: Option<Alignment<'_>>,
) -> Result<DepthResult> {
    let imgs = quad.images();
    // The kernel compares confidence in raw units, Σ (I(ρ+Δρ) − I(ρ−Δρ))²,
    // which is 4Δρ² times the derivative-unit confidence.
    let raw_scale = 4.0 * quad.config.delta_rho * quad.config.delta_rho;
    let raw_options = KernelOptions {
        c_thre: options.c_thre * raw_scale,
        ..*options
    };
    let out = lut_kernel::<f64>(
        [imgs[0].data(), imgs[1].data(), imgs[2].data(), imgs[3].data()],
        quad.dims(),
        &quad.config,
        lut,
        &raw_options,
        alignment,
    )?;
    let (w, h) = quad.dims();
    let conf = out.confidence.iter().map(|c| c / raw_scale).collect();
    DepthResult::new(Image2D::new(w, h, out.depth)?, Image2D::new(w, h, conf)?, out.valid)
}
