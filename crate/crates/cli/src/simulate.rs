use std::path::PathBuf;

use clap::Args;
use codiff::analysis::{log_space, FULL_SCALE};
use codiff::io::{write_quad, write_sweep_manifest};
use codiff::optics::{capture_quad, generate_texture, ApertureProfile, NoiseModel, ProfileKind, TextureKind};
use codiff::units::parse_quantity;
use codiff::{Error, Result};

use crate::Common;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Plane depth, e.g. `1.0m` or `800mm`.
    #[arg(long, conflicts_with = "depths")]
    pub depth: Option<String>,
    /// Log-spaced depth sweep `lo:hi:count`, e.g. `0.3m:3m:8`; `z:z:1` is a
    /// one-capture sweep.
    #[arg(long)]
    pub depths: Option<String>,
    /// Texture PGM; rescaled so its peak is full scale. Without it a 1/f
    /// texture is generated from the seed.
    #[arg(long)]
    pub texture: Option<PathBuf>,
    /// Side of the generated texture, texels.
    #[arg(long, default_value_t = 256)]
    pub texture_size: usize,
    /// Aperture profile preset.
    #[arg(long, default_value = "pillbox")]
    pub profile: String,
    /// Photons per brightness level.
    #[arg(long, default_value_t = codiff::optics::PROTOTYPE_LAMBDA)]
    pub lambda: f64,
    /// Render without noise.
    #[arg(long)]
    pub noiseless: bool,
    /// Image size `W` or `WxH`, pixels.
    #[arg(long, default_value = "128")]
    pub size: String,
}

pub fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("bad size '{s}', expected W or WxH"));
    let (w, h) = match s.split_once('x') {
        Some((w, h)) => (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?),
        None => {
            let n = s.parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn parse_depths(args: &SimulateArgs) -> Result<(Vec<f64>, bool)> {
    match (&args.depth, &args.depths) {
        (Some(d), None) => Ok((vec![parse_quantity(d)?], false)),
        (None, Some(spec)) => {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad depth sweep '{spec}', expected lo:hi:count")));
            }
            let n = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad depth count '{}'", parts[2])))?;
            let (lo, hi) = (parse_quantity(parts[0])?, parse_quantity(parts[1])?);
            if n == 1 && lo == hi {
                return Ok((vec![lo], true));
            }
            Ok((log_space(lo, hi, n)?, true))
        }
        _ => Err(Error::Parameter("give --depth or --depths".into())),
    }
}

pub fn run(common: &Common, args: &SimulateArgs) -> Result<()> {
    let config = common.load_config()?;
    let dims = parse_dims(&args.size)?;
    let profile = ApertureProfile::preset(ProfileKind::parse(&args.profile)?);
    let (depths, sweep) = parse_depths(args)?;
    let mut manifest = common.manifest("simulate")?;
    let texture = match &args.texture {
        Some(p) => {
            let t = generate_texture(&TextureKind::File(p.clone()), dims, common.seed)?;
            manifest.input(p)?;
            let peak = t.image.max();
            if !(peak > 0.0) {
                return Err(Error::Parameter(format!("texture {} is black", p.display())));
            }
            t.scaled(FULL_SCALE / peak)?
        }
        None => {
            let n = args.texture_size;
            generate_texture(&TextureKind::OneOverF, (n, n), common.seed)?.scaled(FULL_SCALE)?
        }
    };
    let noise = if args.noiseless {
        None
    } else {
        Some(NoiseModel::new(args.lambda, common.seed)?)
    };
    manifest.option("profile", profile.kind().name());
    manifest.option("size", format!("{}x{}", dims.0, dims.1));
    manifest.option("lambda", noise.map_or("none".to_string(), |n| format!("{:?}", n.lambda)));
    if let Some(d) = &args.depth {
        manifest.option("depth", d);
    }
    if let Some(d) = &args.depths {
        manifest.option("depths", d);
    }

    let mut entries = Vec::new();
    for (i, &z) in depths.iter().enumerate() {
        let cell_noise = noise.map(|n| n.child(&[i as u64]));
        let mut quad = capture_quad(&texture, z, &profile, &config, cell_noise.as_ref(), None, dims)?;
        if common.quantize16 {
            quad = quad.quantized();
        }
        let (dir, name) = if sweep {
            let name = format!("z{i:03}");
            (common.out.join(&name), Some(name))
        } else {
            (common.out.clone(), None)
        };
        let written = write_quad(&dir, &quad, common.seed, !common.quantize16)?;
        manifest.outputs.extend(written);
        if let Some(name) = name {
            entries.push((name, z));
        }
        println!("depth {z:.4} m -> {}", dir.display());
    }
    if sweep {
        let path = common.out.join("sweep.txt");
        write_sweep_manifest(&path, &entries)?;
        manifest.outputs.push(path);
        for (name, _) in &entries {
            manifest.write(&common.out.join(name))?;
        }
    }
    manifest.write(&common.out)?;
    Ok(())
}
