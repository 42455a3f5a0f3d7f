use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Subcommand;
use codiff::calibration::{build_lut, build_warp, calibrate_noise, fit_magnification, NoiseEstimate};
use codiff::estimator::{DEFAULT_BINS, DEFAULT_WINDOW};
use codiff::io::{observations_from_csv, read_image, read_sweep};
use codiff::{Error, Image2D, Result};

use crate::simulate::parse_dims;
use crate::{write_text, Common};

#[derive(Subcommand, Debug)]
pub enum CalibrateKind {
    /// Fit λ from repeated frames of a static scene.
    Noise {
        /// Frame files, or directories whose .pgm/.f32 files are read in name order.
        #[arg(required = true)]
        frames: Vec<PathBuf>,
    },
    /// Fit the magnification model from point-center observations.
    Geometry {
        /// CSV with header `point,rho_dpt,x_px,y_px`.
        #[arg(long)]
        observations: PathBuf,
        /// Reference optical power; defaults to the configuration's ρ.
        #[arg(long)]
        rho0: Option<f64>,
        /// Also write ρ±Δρ → ρ warp tables for images of this size (`W` or `WxH`).
        #[arg(long)]
        warp_size: Option<String>,
    },
    /// Build a depth LUT from a calibration sweep.
    Lut {
        /// Sweep manifest listing captures and true depths.
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
}

fn frame_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let rd = std::fs::read_dir(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            let mut found: Vec<PathBuf> = rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "pgm" || x == "f32"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn noise(common: &Common, inputs: &[PathBuf]) -> Result<()> {
    let mut manifest = common.manifest("calibrate noise")?;
    let files = frame_files(inputs)?;
    let frames: Vec<Image2D> = files.iter().map(|f| read_image(f)).collect::<Result<_>>()?;
    for f in &files {
        manifest.input(f)?;
    }
    let cal = calibrate_noise(&frames)?;
    let lambda = match cal.estimate {
        NoiseEstimate::Lambda(l) => format!("{l:?}"),
        NoiseEstimate::NoiseFree => "noise-free".to_string(),
    };
    let report = format!(
        "lambda = {lambda}\nframes = {}\npixels_used = {}\n",
        cal.frames, cal.pixels_used
    );
    let mut hist = String::from("residual,count\n");
    for (c, n) in &cal.residual_histogram {
        let _ = writeln!(hist, "{c:.3},{n}");
    }
    manifest.outputs.push(write_text(&common.out, "noise.txt", &report)?);
    manifest.outputs.push(write_text(&common.out, "residuals.csv", &hist)?);
    print!("{report}");
    manifest.write(&common.out)?;
    Ok(())
}

fn geometry(common: &Common, observations: &Path, rho0: Option<f64>, warp_size: Option<&str>) -> Result<()> {
    let config = common.load_config()?;
    let mut manifest = common.manifest("calibrate geometry")?;
    let text = std::fs::read_to_string(observations).map_err(|e| Error::Io {
        path: observations.to_path_buf(),
        source: e,
    })?;
    manifest.input(observations)?;
    let obs = observations_from_csv(&text)?;
    let rho0 = rho0.unwrap_or(config.rho);
    manifest.option("rho0", format!("{rho0:?}"));
    let fit = fit_magnification(&obs, rho0)?;
    let model_path = common.out.join("magnification.txt");
    codiff::io::ensure_dir(&common.out)?;
    fit.model.save(&model_path)?;
    manifest.outputs.push(model_path);
    let report = format!("observations = {}\nresidual_rms_px = {:e}\n", obs.len(), fit.rms);
    manifest.outputs.push(write_text(&common.out, "geometry_report.txt", &report)?);
    if let Some(size) = warp_size {
        let dims = parse_dims(size)?;
        manifest.option("warp_size", size);
        for (name, rho) in [("warp_plus.bin", config.rho + config.delta_rho), ("warp_minus.bin", config.rho - config.delta_rho)] {
            let table = build_warp(&fit.model, rho, config.rho, dims)?;
            let path = common.out.join(name);
            table.save(&path)?;
            manifest.outputs.push(path);
        }
    }
    print!("{report}");
    manifest.write(&common.out)?;
    Ok(())
}

fn lut(common: &Common, sweep_path: &Path, window: usize, bins: usize) -> Result<()> {
    let mut manifest = common.manifest("calibrate lut")?;
    manifest.input(sweep_path)?;
    manifest.option("window", window);
    manifest.option("bins", bins);
    let sweep = read_sweep(sweep_path)?;
    let config = match (&common.config, sweep.first()) {
        (Some(_), _) => common.load_config()?,
        (None, Some((q, _))) => q.config,
        (None, None) => {
            return Err(Error::Insufficient {
                what: "sweep captures".into(),
                expected: 2,
                found: 0,
            })
        }
    };
    let built = build_lut(&sweep, &config, window, bins)?;
    let path = common.out.join("lut.txt");
    codiff::io::ensure_dir(&common.out)?;
    built.lut.save(&path)?;
    manifest.outputs.push(path);
    let mut occ = String::from("bin,samples\n");
    for (i, n) in built.occupancy.iter().enumerate() {
        let _ = writeln!(occ, "{i},{n}");
    }
    manifest.outputs.push(write_text(&common.out, "occupancy.csv", &occ)?);
    let filled = built.occupancy.iter().filter(|&&n| n > 0).count();
    let report = format!(
        "captures = {}\nr_range = [{:e}, {:e}]\nbins = {}\nbins_with_samples = {filled}\n",
        sweep.len(),
        built.lut.r_min,
        built.lut.r_max,
        built.lut.bins()
    );
    manifest.outputs.push(write_text(&common.out, "lut_report.txt", &report)?);
    print!("{report}");
    manifest.write(&common.out)?;
    Ok(())
}

pub fn run(common: &Common, kind: &CalibrateKind) -> Result<()> {
    match kind {
        CalibrateKind::Noise { frames } => noise(common, frames),
        CalibrateKind::Geometry {
            observations,
            rho0,
            warp_size,
        } => geometry(common, observations, *rho0, warp_size.as_deref()),
        CalibrateKind::Lut { sweep, window, bins } => lut(common, sweep, *window, *bins),
    }
}
