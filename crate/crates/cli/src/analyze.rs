use std::fmt::Write as _;

use clap::{Args, ValueEnum};
use codiff::analysis::{
    aperture_study, log_space, mae_sweep, optimize_steps, snr_study, sparsification_csv, sparsification_study,
    sparsity_grid, study_textures, window_elbow, working_range, Dataset, EstimatorKind, EstimatorSpec, Threshold,
    WorkingRange, DEFAULT_DEPTH_COUNT, DEFAULT_DEPTH_RANGE, DEFAULT_GRID, DEFAULT_SPECTRUM_DEPTH,
    DEFAULT_STEP_SPARSITY, DEFAULT_TEXTURE_COUNT, DEFAULT_WINDOWS,
};
use codiff::optics::{ApertureProfile, ProfileKind, PROTOTYPE_LAMBDA};
use codiff::{Error, Result};

use crate::simulate::parse_dims;
use crate::{write_text, Common};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    Snr,
    Range,
    Sparsify,
    Aperture,
    Steps,
    Window,
}

impl Study {
    fn name(self) -> &'static str {
        match self {
            Study::Snr => "snr",
            Study::Range => "range",
            Study::Sparsify => "sparsify",
            Study::Aperture => "aperture",
            Study::Steps => "steps",
            Study::Window => "window",
        }
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub study: Study,
    /// Number of generated textures.
    #[arg(long, default_value_t = DEFAULT_TEXTURE_COUNT)]
    pub textures: usize,
    /// Number of log-spaced depths over the study range.
    #[arg(long, default_value_t = DEFAULT_DEPTH_COUNT)]
    pub depth_count: usize,
    /// Crop size `W` or `WxH`, pixels.
    #[arg(long, default_value = "64")]
    pub size: String,
    /// Aperture profile preset.
    #[arg(long, default_value = "pillbox")]
    pub profile: String,
    /// Estimator: cod_windowed, cod_lut or focal_track.
    #[arg(long, default_value = "cod_windowed")]
    pub estimator: String,
    #[arg(long, default_value_t = codiff::estimator::DEFAULT_WINDOW)]
    pub window: usize,
    /// Fraction of pixels discarded by the confidence threshold. Defaults
    /// to 0, or to the step-search default for `steps`.
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long, default_value_t = PROTOTYPE_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub noiseless: bool,
}

fn dataset(common: &Common, args: &AnalyzeArgs) -> Result<Dataset> {
    let (lo, hi) = DEFAULT_DEPTH_RANGE;
    let ds = Dataset {
        config: common.load_config()?,
        profile: ApertureProfile::preset(ProfileKind::parse(&args.profile)?),
        textures: study_textures(args.textures, common.seed)?,
        depths: log_space(lo, hi, args.depth_count)?,
        dims: parse_dims(&args.size)?,
        lambda: (!args.noiseless).then_some(args.lambda),
        trials: 1,
        seed: common.seed,
    };
    ds.validate()?;
    Ok(ds)
}

fn range_text(r: &WorkingRange) -> String {
    if r.is_empty() {
        "empty".to_string()
    } else {
        format!("[{:.3}, {:.3}] m, length {:.3} m", r.z_lo, r.z_hi, r.length)
    }
}

pub fn run(common: &Common, args: &AnalyzeArgs) -> Result<()> {
    let ds = dataset(common, args)?;
    let spec = EstimatorSpec::new(EstimatorKind::parse(&args.estimator)?).with_window(args.window);
    let sparsity = args.sparsity.unwrap_or(match args.study {
        Study::Steps => DEFAULT_STEP_SPARSITY,
        _ => 0.0,
    });
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::Parameter(format!("sparsity must lie in [0, 1), got {sparsity}")));
    }
    let threshold = Threshold::Sparsity(sparsity);
    let mut manifest = common.manifest(&format!("analyze {}", args.study.name()))?;
    for (k, v) in [
        ("textures", args.textures.to_string()),
        ("depth_count", args.depth_count.to_string()),
        ("size", args.size.clone()),
        ("profile", args.profile.clone()),
        ("estimator", args.estimator.clone()),
        ("window", args.window.to_string()),
        ("sparsity", format!("{sparsity:?}")),
        ("lambda", ds.lambda.map_or("none".into(), |l| format!("{l:?}"))),
    ] {
        manifest.option(k, v);
    }

    let mut csvs: Vec<(&str, String)> = Vec::new();
    let mut summary = String::new();
    match args.study {
        Study::Snr => {
            let curve = snr_study(&ds)?;
            let above = (0..curve.depths.len())
                .filter(|&i| curve.snr_rho[i] > curve.snr_lap[i] && curve.snr_a[i] > curve.snr_lap[i])
                .count();
            let _ = writeln!(
                summary,
                "optical derivatives above the Laplacian at {above} of {} depths",
                curve.depths.len()
            );
            csvs.push(("snr.csv", curve.to_csv()));
        }
        Study::Range => {
            let cod = mae_sweep(&ds, &spec, threshold)?;
            let ft = mae_sweep(&ds, &EstimatorSpec::new(EstimatorKind::FocalTrack).with_window(args.window), threshold)?;
            let (rc, rf) = (working_range(&cod), working_range(&ft));
            let _ = writeln!(summary, "{} working range: {}", cod.estimator, range_text(&rc));
            let _ = writeln!(summary, "{} working range: {}", ft.estimator, range_text(&rf));
            let ratio = if rf.length > 0.0 { rc.length / rf.length } else { f64::INFINITY };
            let _ = writeln!(summary, "ratio: {ratio:.3}");
            let mut csv = cod.to_csv();
            csv.push_str(ft.to_csv().split_once('\n').map_or("", |(_, rest)| rest));
            csvs.push(("range.csv", csv));
        }
        Study::Sparsify => {
            let points = sparsification_study(&ds, &spec, &sparsity_grid())?;
            for p in &points {
                let _ = writeln!(
                    summary,
                    "sparsity {:.2}: MAE {:.4} m, range {}",
                    p.sparsity,
                    p.mae,
                    range_text(&p.range)
                );
            }
            csvs.push(("sparsify.csv", sparsification_csv(&points)));
        }
        Study::Aperture => {
            let st = aperture_study(&ds, &spec, threshold, DEFAULT_SPECTRUM_DEPTH)?;
            let mut wins = st.wins();
            wins.sort_by(|a, b| b.1.cmp(&a.1));
            let ranking: Vec<String> = wins.iter().map(|(k, n)| format!("{} ({n})", k.name())).collect();
            let _ = writeln!(summary, "lowest-MAE depths per profile: {}", ranking.join(", "));
            csvs.push(("aperture_mae.csv", st.mae_csv()));
            csvs.push(("aperture_spectrum.csv", st.spectrum_csv()));
        }
        Study::Steps => {
            let bounds = (ds.config.delta_rho_max, ds.config.delta_a_max);
            let search = optimize_steps(&ds, &spec, bounds, DEFAULT_GRID, sparsity)?;
            let (dr, da) = search.best;
            let _ = writeln!(summary, "delta_rho = {dr:.4} dpt, delta_A = {:.4} mm", da * 1e3);
            csvs.push(("steps.csv", search.to_csv()));
        }
        Study::Window => {
            let st = window_elbow(&ds, &spec, &DEFAULT_WINDOWS, threshold)?;
            let _ = writeln!(summary, "elbow window: {}", st.elbow);
            csvs.push(("window.csv", st.to_csv()));
        }
    }
    for (name, csv) in &csvs {
        manifest.outputs.push(write_text(&common.out, name, csv)?);
    }
    manifest.outputs.push(write_text(&common.out, "summary.txt", &summary)?);
    print!("{summary}");
    manifest.write(&common.out)?;
    Ok(())
}
