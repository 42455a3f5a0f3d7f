use std::path::PathBuf;

use clap::Args;
use codiff::analysis::DEFAULT_LUT_DEPTHS;
use codiff::calibration::WarpTable;
use codiff::estimator::{
    confidence_threshold, count_flopop, depth_windowed, derivatives, infer_lut, Alignment, DepthLut, DepthResult,
    FlopOptions, KernelOptions, DEFAULT_BACKGROUND_DIM, DEFAULT_BINS, DEFAULT_WINDOW,
};
use codiff::io::{quad_manifest_path, read_quad, write_depth_result};
use codiff::{Error, Result};

use crate::{write_text, Common};

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Capture directory or its quad manifest.
    pub quad: PathBuf,
    /// Depth LUT; without it a closed-form table is built for the capture.
    #[arg(long, conflicts_with = "no_lut")]
    pub lut: Option<PathBuf>,
    /// Use the closed-form depth instead of the LUT kernel.
    #[arg(long)]
    pub no_lut: bool,
    /// Window side, pixels (odd).
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Confidence threshold, in derivative units.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c_thre: f64,
    /// Skip background removal on I_A.
    #[arg(long)]
    pub no_background: bool,
    /// Bins of the closed-form table.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Warp table mapping the ρ+Δρ image onto the ρ grid.
    #[arg(long, requires = "warp_minus")]
    pub warp_plus: Option<PathBuf>,
    /// Warp table mapping the ρ−Δρ image onto the ρ grid.
    #[arg(long, requires = "warp_plus")]
    pub warp_minus: Option<PathBuf>,
}

pub fn run(common: &Common, args: &EstimateArgs) -> Result<()> {
    let mut manifest = common.manifest("estimate")?;
    let (quad, qm) = read_quad(&args.quad)?;
    let mpath = quad_manifest_path(&args.quad);
    manifest.input(&mpath)?;
    let base = mpath.parent().map(PathBuf::from).unwrap_or_default();
    for f in &qm.images {
        manifest.input(&base.join(f))?;
    }
    if common.config.is_some() {
        let config = common.load_config()?;
        if config.hash() != quad.config.hash() {
            return Err(Error::ConfigMismatch(format!(
                "--config has hash {} but the capture was taken with {}",
                config.hash(),
                quad.config.hash()
            )));
        }
    }
    let background_dim = (!args.no_background).then_some(DEFAULT_BACKGROUND_DIM);
    manifest.option("window", args.window);
    manifest.option("c_thre", format!("{:?}", args.c_thre));
    manifest.option("background_removal", background_dim.is_some());

    let (result, flops): (DepthResult, Option<String>) = if args.no_lut {
        manifest.option("lut", "none");
        let raw = depth_windowed(&derivatives(&quad, background_dim)?, args.window)?;
        (confidence_threshold(&raw, args.c_thre)?, None)
    } else {
        let lut = match &args.lut {
            Some(p) => {
                let lut = DepthLut::load(p)?;
                manifest.input(p)?;
                lut.check_config(&quad.config)?;
                lut
            }
            None => {
                let zs = quad.config.sensor_dist;
                let (lo, hi) = DEFAULT_LUT_DEPTHS;
                manifest.option("lut", format!("closed-form {} bins", args.bins));
                DepthLut::from_closed_form(&quad.config, lo / zs, hi / zs, args.bins)?
            }
        };
        let tables = match (&args.warp_plus, &args.warp_minus) {
            (Some(p), Some(m)) => {
                manifest.input(p)?;
                manifest.input(m)?;
                Some((WarpTable::load(p)?, WarpTable::load(m)?))
            }
            _ => None,
        };
        let alignment = tables.as_ref().map(|(plus, minus)| Alignment { plus, minus });
        let options = KernelOptions {
            background_dim,
            window: args.window,
            c_thre: args.c_thre,
        };
        let result = infer_lut(&quad, &lut, &options, alignment)?;
        let report = count_flopop(&FlopOptions {
            background_removal: background_dim.is_some(),
            alignment: alignment.is_some(),
            window: args.window,
            bins: lut.bins(),
        });
        (result, Some(report.render()))
    };

    let out = &common.out;
    manifest.outputs.extend(write_depth_result(out, &result)?);
    if let Some(report) = &flops {
        manifest.outputs.push(write_text(out, "flopop.txt", report)?);
        print!("{report}");
    }
    let (w, h) = result.dims();
    println!("valid pixels: {} of {}", result.valid_count(), w * h);
    match result.median_depth() {
        Some(z) => println!("median depth: {z:.4} m"),
        None => println!("median depth: none"),
    }
    if let Some(z) = quad.z_true {
        println!("true depth: {z:.4} m");
    }
    manifest.write(out)?;
    Ok(())
}
