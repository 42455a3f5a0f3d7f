//! File formats for captures, depth planes, calibration sweeps, point
//! observations and run manifests.
//!
//! Quad manifest (`quad.txt`): the config keys, then `lambda`, `seed`,
//! `z_true` and the four image file names, all `key = value`. Float planes
//! are a one-line text header `F32 <width> <height>` followed by
//! little-endian f32 samples in row-major order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::calibration::PointObservation;
use crate::config::OpticalConfig;
use crate::error::{Error, Result};
use crate::estimator::DepthResult;
use crate::image::{write_all, write_pgm8, Image2D};
use crate::optics::{NoiseModel, QuadCapture};
use crate::units::parse_quantity;

/// File name of the quad manifest inside a capture directory.
pub const QUAD_MANIFEST: &str = "quad.txt";
/// File name of the run manifest written into every output directory.
pub const RUN_MANIFEST: &str = "run.txt";

const IMAGE_KEYS: [&str; 4] = ["rho_plus", "rho_minus", "a_plus", "a_minus"];
const CONFIG_KEYS: [&str; 8] = [
    "rho",
    "A",
    "Z_s",
    "pixel_pitch",
    "delta_rho",
    "delta_A",
    "delta_rho_max",
    "delta_A_max",
];

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Creates `dir` and its parents.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
fn key_values(text: &str, what: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("{what} line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

// ---- float planes ----

pub fn encode_plane(img: &Image2D) -> Vec<u8> {
    let mut out = format!("F32 {} {}\n", img.width(), img.height()).into_bytes();
    out.reserve(img.len() * 4);
    for &v in img.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_plane(bytes: &[u8]) -> Result<Image2D> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Parse("float plane has no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Parse("float plane header is not text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "F32" {
        return Err(Error::Parse(format!("bad float plane header '{header}'")));
    }
    let dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad float plane dimension '{s}'")))
    };
    let (w, h) = (dim(fields[1])?, dim(fields[2])?);
    let body = &bytes[nl + 1..];
    if body.len() != w * h * 4 {
        return Err(Error::Parse(format!(
            "float plane holds {} bytes, expected {}",
            body.len(),
            w * h * 4
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Image2D::new(w, h, data)
}

pub fn write_plane(path: &Path, img: &Image2D) -> Result<()> {
    write_all(path, &encode_plane(img))
}

pub fn read_plane(path: &Path) -> Result<Image2D> {
    decode_plane(&read_bytes(path)?).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads a `.f32` plane or a PGM, chosen by extension.
pub fn read_image(path: &Path) -> Result<Image2D> {
    if path.extension().is_some_and(|e| e == "f32") {
        read_plane(path)
    } else {
        Image2D::read_pgm(path)
    }
}

// ---- quad captures ----

/// Metadata stored next to a capture's images.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadManifest {
    pub config: OpticalConfig,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub z_true: Option<f64>,
    /// Image files in the order ρ+, ρ−, A+, A−, relative to the manifest.
    pub images: [String; 4],
}

impl QuadManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# quad capture\n");
        s.push_str(&self.config.to_text());
        match self.lambda {
            Some(l) => {
                let _ = writeln!(s, "lambda = {l:?}");
            }
            None => s.push_str("lambda = none\n"),
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        match self.z_true {
            Some(z) => {
                let _ = writeln!(s, "z_true = {z:?}m");
            }
            None => s.push_str("z_true = none\n"),
        }
        for (k, f) in IMAGE_KEYS.iter().zip(&self.images) {
            let _ = writeln!(s, "{k} = {f}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config_text = String::new();
        let mut rest = BTreeMap::new();
        for (k, v) in key_values(text, "quad manifest")? {
            if CONFIG_KEYS.contains(&k.as_str()) {
                let _ = writeln!(config_text, "{k} = {v}");
            } else {
                rest.insert(k, v);
            }
        }
        let config = OpticalConfig::from_text(&config_text)?;
        let mut take = |k: &str| {
            rest.remove(k)
                .ok_or_else(|| Error::Parse(format!("quad manifest is missing '{k}'")))
        };
        let lambda = match take("lambda")?.as_str() {
            "none" => None,
            v => Some(v.parse::<f64>().map_err(|_| Error::Parse(format!("bad lambda '{v}'")))?),
        };
        let seed_text = take("seed")?;
        let seed = seed_text
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad seed '{seed_text}'")))?;
        let z_true = match take("z_true")?.as_str() {
            "none" => None,
            v => Some(parse_quantity(v)?),
        };
        let images = [
            take(IMAGE_KEYS[0])?,
            take(IMAGE_KEYS[1])?,
            take(IMAGE_KEYS[2])?,
            take(IMAGE_KEYS[3])?,
        ];
        if let Some(k) = rest.keys().next() {
            return Err(Error::Parse(format!("unknown quad manifest key '{k}'")));
        }
        Ok(QuadManifest {
            config,
            lambda,
            seed,
            z_true,
            images,
        })
    }
}

/// Writes the four images as 16-bit PGMs plus the manifest. With
/// `float_planes` the manifest points at lossless `.f32` copies instead,
/// and the PGMs remain as the interchange copies.
pub fn write_quad(dir: &Path, quad: &QuadCapture, seed: u64, float_planes: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut names: [String; 4] = Default::default();
    for (i, (key, img)) in IMAGE_KEYS.iter().zip(quad.images()).enumerate() {
        let pgm = dir.join(format!("{key}.pgm"));
        img.write_pgm16(&pgm)?;
        written.push(pgm);
        names[i] = format!("{key}.pgm");
        if float_planes {
            let f = dir.join(format!("{key}.f32"));
            write_plane(&f, img)?;
            written.push(f);
            names[i] = format!("{key}.f32");
        }
    }
    let manifest = QuadManifest {
        config: quad.config,
        lambda: quad.noise.map(|n| n.lambda),
        seed,
        z_true: quad.z_true,
        images: names,
    };
    let path = dir.join(QUAD_MANIFEST);
    write_all(&path, manifest.to_text().as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Resolves a capture directory or a manifest path to the manifest file.
pub fn quad_manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(QUAD_MANIFEST)
    } else {
        path.to_path_buf()
    }
}

/// Reads a capture from its directory or manifest path.
pub fn read_quad(path: &Path) -> Result<(QuadCapture, QuadManifest)> {
    let mpath = quad_manifest_path(path);
    let manifest = QuadManifest::from_text(&read_text(&mpath)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", mpath.display())))?;
    let base = mpath.parent().unwrap_or(Path::new("."));
    let [rp, rm, ap, am] = [0, 1, 2, 3].map(|i| read_image(&base.join(&manifest.images[i])));
    let mut quad = QuadCapture::new(rp?, rm?, ap?, am?, manifest.config)?;
    quad.z_true = manifest.z_true;
    quad.noise = match manifest.lambda {
        Some(l) => Some(NoiseModel::new(l, manifest.seed)?),
        None => None,
    };
    Ok((quad, manifest))
}

// ---- depth results ----

/// Writes `depth.f32`, `confidence.f32` and `valid.pgm` (255 = valid).
pub fn write_depth_result(dir: &Path, result: &DepthResult) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let depth = dir.join("depth.f32");
    let conf = dir.join("confidence.f32");
    let valid = dir.join("valid.pgm");
    write_plane(&depth, &result.depth)?;
    write_plane(&conf, &result.confidence)?;
    let mask: Vec<u8> = result.valid.iter().map(|&v| if v { 255 } else { 0 }).collect();
    let (w, h) = result.dims();
    write_pgm8(&valid, w, h, &mask)?;
    Ok(vec![depth, conf, valid])
}

pub fn read_depth_result(dir: &Path) -> Result<DepthResult> {
    let depth = read_plane(&dir.join("depth.f32"))?;
    let conf = read_plane(&dir.join("confidence.f32"))?;
    let mask = Image2D::read_pgm(&dir.join("valid.pgm"))?;
    DepthResult::new(depth, conf, mask.data().iter().map(|&v| v > 0.0).collect())
}

// ---- calibration inputs ----

/// Calibration sweep manifest: one `<capture path> <depth>` per line,
/// paths relative to the manifest, depths with an optional unit suffix.
pub fn read_sweep_manifest(path: &Path) -> Result<Vec<(PathBuf, f64)>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (p, z) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse(format!("sweep manifest line {}: expected '<path> <depth>'", i + 1)))?;
        let z = parse_quantity(z.trim()).map_err(|e| Error::Parse(format!("sweep manifest line {}: {e}", i + 1)))?;
        out.push((base.join(p.trim()), z));
    }
    Ok(out)
}

pub fn write_sweep_manifest(path: &Path, entries: &[(String, f64)]) -> Result<()> {
    let mut s = String::from("# capture depth\n");
    for (p, z) in entries {
        let _ = writeln!(s, "{p} {z:?}m");
    }
    write_all(path, s.as_bytes())
}

/// Reads every capture listed in a sweep manifest.
pub fn read_sweep(path: &Path) -> Result<Vec<(QuadCapture, f64)>> {
    read_sweep_manifest(path)?
        .into_iter()
        .map(|(p, z)| read_quad(&p).map(|(q, _)| (q, z)))
        .collect()
}

pub const OBSERVATIONS_HEADER: &str = "point,rho_dpt,x_px,y_px";

/// Point observations as CSV with [`OBSERVATIONS_HEADER`].
pub fn observations_to_csv(obs: &[PointObservation]) -> String {
    let mut s = format!("{OBSERVATIONS_HEADER}\n");
    for o in obs {
        let _ = writeln!(s, "{},{:?},{:?},{:?}", o.point, o.rho, o.center[0], o.center[1]);
    }
    s
}

pub fn observations_from_csv(text: &str) -> Result<Vec<PointObservation>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == OBSERVATIONS_HEADER => {}
        _ => return Err(Error::Parse(format!("observations need the header '{OBSERVATIONS_HEADER}'"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("observation row {}: '{line}'", i + 1));
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(PointObservation {
                point: f[0].parse().map_err(|_| bad())?,
                rho: num(f[1])?,
                center: [num(f[2])?, num(f[3])?],
            })
        })
        .collect()
}

// ---- run manifests ----

/// Record of one command invocation, written into its output directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    /// Options in the order given, as `(name, value)`.
    pub options: Vec<(String, String)>,
    /// Input files with their SHA-256.
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            seed,
            ..Default::default()
        }
    }

    pub fn option(&mut self, name: &str, value: impl ToString) {
        self.options.push((name.to_string(), value.to_string()));
    }

    /// Records an input file and its hash.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), h));
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# run manifest\n");
        let _ = writeln!(s, "command = {}", self.command);
        let config = self.config_path.as_ref().map_or("default".into(), |p| p.display().to_string());
        let _ = writeln!(s, "config = {config}");
        let _ = writeln!(s, "seed = {}", self.seed);
        for (k, v) in &self.options {
            let _ = writeln!(s, "option.{k} = {v}");
        }
        for (p, h) in &self.inputs {
            let _ = writeln!(s, "input = {} sha256:{h}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(s, "output = {}", p.display());
        }
        s
    }

    /// Writes the manifest as [`RUN_MANIFEST`] in `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        ensure_dir(dir)?;
        let path = dir.join(RUN_MANIFEST);
        write_all(&path, self.to_text().as_bytes())?;
        Ok(path)
    }
}
