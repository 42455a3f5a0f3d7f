//! `codiff`: simulate captures, estimate depth, calibrate and run studies.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or file format, 3 numerical or
//! validation failure.

mod analyze;
mod calibrate;
mod estimate;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codiff::{Error, OpticalConfig};

#[derive(Parser, Debug)]
#[command(name = "codiff", version, about = "Depth from coupled optical differentiation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Optical configuration file (key = value with unit suffixes).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Round and clamp simulated images to 16-bit levels.
    #[arg(long, global = true)]
    pub quantize16: bool,
}

impl Common {
    pub fn load_config(&self) -> codiff::Result<OpticalConfig> {
        match &self.config {
            Some(p) => OpticalConfig::load(p),
            None => Ok(OpticalConfig::default()),
        }
    }

    pub fn manifest(&self, command: &str) -> codiff::Result<codiff::io::RunManifest> {
        let mut m = codiff::io::RunManifest::new(command, self.config.as_deref(), self.seed);
        if let Some(p) = &self.config {
            m.input(p)?;
        }
        if self.quantize16 {
            m.option("quantize16", true);
        }
        Ok(m)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render four-image captures of a textured plane.
    Simulate(simulate::SimulateArgs),
    /// Estimate depth from a capture.
    Estimate(estimate::EstimateArgs),
    /// Fit a calibration model.
    Calibrate {
        #[command(subcommand)]
        kind: calibrate::CalibrateKind,
    },
    /// Run a simulation study and write its CSV and summary.
    Analyze(analyze::AnalyzeArgs),
}

/// Exit code for a pipeline error.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Parse(_) => 2,
        _ => 3,
    }
}

/// Writes `text` to `dir/name` and returns the path.
pub fn write_text(dir: &Path, name: &str, text: &str) -> codiff::Result<PathBuf> {
    codiff::io::ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&cli.common, &a),
        Command::Estimate(a) => estimate::run(&cli.common, &a),
        Command::Calibrate { kind } => calibrate::run(&cli.common, &kind),
        Command::Analyze(a) => analyze::run(&cli.common, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
