//! Python bindings: configuration, simulation, depth estimation and
//! calibration. Images cross the boundary as row-major lists of floats.

use std::path::PathBuf;

use codiff::analysis::study_textures;
use codiff::calibration::{build_lut, calibrate_noise as calibrate_noise_core};
use codiff::estimator::{count_flopop as count_flopop_core, derivatives, depth_windowed, confidence_threshold};
use codiff::optics::{capture_quad, ApertureProfile, NoiseModel, ProfileKind};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: codiff::Error) -> PyErr {
    match e {
        codiff::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn image(width: usize, height: usize, data: Vec<f64>) -> PyResult<codiff::Image2D> {
    codiff::Image2D::new(width, height, data).map_err(py_err)
}

/// Optical configuration in SI units.
#[pyclass(name = "OpticalConfig", frozen)]
#[derive(Clone)]
struct PyConfig {
    inner: codiff::OpticalConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (rho=None, aperture=None, sensor_dist=None, pixel_pitch=None, delta_rho=None, delta_a=None))]
    fn new(
        rho: Option<f64>,
        aperture: Option<f64>,
        sensor_dist: Option<f64>,
        pixel_pitch: Option<f64>,
        delta_rho: Option<f64>,
        delta_a: Option<f64>,
    ) -> PyResult<Self> {
        let d = codiff::OpticalConfig::default();
        let inner = codiff::OpticalConfig::new(
            rho.unwrap_or(d.rho),
            aperture.unwrap_or(d.aperture),
            sensor_dist.unwrap_or(d.sensor_dist),
            pixel_pitch.unwrap_or(d.pixel_pitch),
            delta_rho.unwrap_or(d.delta_rho),
            delta_a.unwrap_or(d.delta_a),
        )
        .map_err(py_err)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: codiff::OpticalConfig::from_text(text).map_err(py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn focus_depth(&self) -> f64 {
        self.inner.focus_depth()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn aperture(&self) -> f64 {
        self.inner.aperture
    }

    #[getter]
    fn sensor_dist(&self) -> f64 {
        self.inner.sensor_dist
    }

    #[getter]
    fn pixel_pitch(&self) -> f64 {
        self.inner.pixel_pitch
    }

    #[getter]
    fn delta_rho(&self) -> f64 {
        self.inner.delta_rho
    }

    #[getter]
    fn delta_a(&self) -> f64 {
        self.inner.delta_a
    }

    fn __repr__(&self) -> String {
        format!("OpticalConfig({})", self.inner.to_text().trim().replace('\n', ", "))
    }
}

/// The four-image capture stack.
#[pyclass(name = "QuadCapture")]
#[derive(Clone)]
struct PyQuad {
    inner: codiff::optics::QuadCapture,
}

#[pymethods]
impl PyQuad {
    /// Builds a capture from four row-major images `[ρ+, ρ−, A+, A−]`.
    #[new]
    fn new(width: usize, height: usize, images: [Vec<f64>; 4], config: &PyConfig) -> PyResult<Self> {
        let [rp, rm, ap, am] = images;
        let inner = codiff::optics::QuadCapture::new(
            image(width, height, rp)?,
            image(width, height, rm)?,
            image(width, height, ap)?,
            image(width, height, am)?,
            config.inner,
        )
        .map_err(py_err)?;
        Ok(PyQuad { inner })
    }

    /// Reads a capture from its manifest file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = codiff::io::read_quad(&path).map_err(py_err)?;
        Ok(PyQuad { inner })
    }

    /// Writes PGM images, float planes and the manifest into `dir`.
    #[pyo3(signature = (dir, seed=0))]
    fn save(&self, dir: PathBuf, seed: u64) -> PyResult<Vec<PathBuf>> {
        codiff::io::write_quad(&dir, &self.inner, seed, true).map_err(py_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.dims().0
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.dims().1
    }

    #[getter]
    fn z_true(&self) -> Option<f64> {
        self.inner.z_true
    }

    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig { inner: self.inner.config }
    }

    /// The four images `[ρ+, ρ−, A+, A−]` as row-major lists.
    fn images(&self) -> Vec<Vec<f64>> {
        self.inner.images().iter().map(|i| i.data().to_vec()).collect()
    }
}

/// Depth, confidence and validity maps.
#[pyclass(name = "DepthResult", frozen)]
struct PyDepth {
    inner: codiff::estimator::DepthResult,
}

#[pymethods]
impl PyDepth {
    #[getter]
    fn width(&self) -> usize {
        self.inner.dims().0
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.dims().1
    }

    #[getter]
    fn depth(&self) -> Vec<f64> {
        self.inner.depth.data().to_vec()
    }

    #[getter]
    fn confidence(&self) -> Vec<f64> {
        self.inner.confidence.data().to_vec()
    }

    #[getter]
    fn valid(&self) -> Vec<bool> {
        self.inner.valid.clone()
    }

    fn median_depth(&self) -> Option<f64> {
        self.inner.median_depth()
    }

    fn sparsity(&self) -> f64 {
        self.inner.sparsity()
    }

    fn save(&self, dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        codiff::io::write_depth_result(&dir, &self.inner).map_err(py_err)
    }
}

/// Ratio-to-depth lookup table.
#[pyclass(name = "DepthLut", frozen)]
struct PyLut {
    inner: codiff::estimator::DepthLut,
}

#[pymethods]
impl PyLut {
    #[staticmethod]
    fn from_closed_form(config: &PyConfig, r_min: f64, r_max: f64, bins: usize) -> PyResult<Self> {
        let inner = codiff::estimator::DepthLut::from_closed_form(&config.inner, r_min, r_max, bins).map_err(py_err)?;
        Ok(PyLut { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyLut {
            inner: codiff::estimator::DepthLut::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    #[getter]
    fn bins(&self) -> usize {
        self.inner.bins()
    }

    #[getter]
    fn r_min(&self) -> f64 {
        self.inner.r_min
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max
    }

    fn depth_step(&self) -> f64 {
        self.inner.depth_step()
    }
}

/// Renders a capture of a fronto-parallel plane at `depth` meters covered by
/// a 1/f texture drawn from `texture_seed`. `lam` enables noise.
#[pyfunction]
#[pyo3(signature = (config, depth, profile="pillbox", size=(64, 64), lam=None, seed=0, texture_seed=0))]
fn simulate(
    config: &PyConfig,
    depth: f64,
    profile: &str,
    size: (usize, usize),
    lam: Option<f64>,
    seed: u64,
    texture_seed: u64,
) -> PyResult<PyQuad> {
    let profile = ApertureProfile::preset(ProfileKind::parse(profile).map_err(py_err)?);
    let texture = study_textures(1, texture_seed).map_err(py_err)?.remove(0);
    let noise = lam.map(|l| NoiseModel::new(l, seed)).transpose().map_err(py_err)?;
    let inner = capture_quad(&texture, depth, &profile, &config.inner, noise.as_ref(), None, size).map_err(py_err)?;
    Ok(PyQuad { inner })
}

/// Estimates depth: closed-form windowed least squares, or the table-driven
/// kernel on raw images when `lut` is given.
#[pyfunction]
#[pyo3(signature = (quad, window=5, background_dim=None, c_thre=0.0, lut=None))]
fn estimate(
    quad: &PyQuad,
    window: usize,
    background_dim: Option<usize>,
    c_thre: f64,
    lut: Option<&PyLut>,
) -> PyResult<PyDepth> {
    let inner = match lut {
        Some(l) => {
            let options = codiff::estimator::KernelOptions {
                background_dim,
                window,
                c_thre,
            };
            codiff::estimator::infer_lut(&quad.inner, &l.inner, &options, None).map_err(py_err)?
        }
        None => {
            let deriv = derivatives(&quad.inner, background_dim).map_err(py_err)?;
            let r = depth_windowed(&deriv, window).map_err(py_err)?;
            confidence_threshold(&r, c_thre).map_err(py_err)?
        }
    };
    Ok(PyDepth { inner })
}

/// Fits λ from repeated frames of a static scene; None when noise-free.
#[pyfunction]
fn calibrate_noise(width: usize, height: usize, frames: Vec<Vec<f64>>) -> PyResult<Option<f64>> {
    let imgs = frames
        .into_iter()
        .map(|f| image(width, height, f))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(calibrate_noise_core(&imgs).map_err(py_err)?.estimate.lambda())
}

/// Builds a depth table from captures with known depths.
#[pyfunction]
#[pyo3(signature = (quads, depths, window=5, bins=4096))]
fn calibrate_lut(quads: Vec<PyQuad>, depths: Vec<f64>, window: usize, bins: usize) -> PyResult<PyLut> {
    if quads.len() != depths.len() {
        return Err(PyValueError::new_err("quads and depths differ in length"));
    }
    let config = quads.first().map(|q| q.inner.config).ok_or_else(|| PyValueError::new_err("no captures"))?;
    let sweep: Vec<_> = quads.into_iter().map(|q| q.inner).zip(depths).collect();
    let built = build_lut(&sweep, &config, window, bins).map_err(py_err)?;
    Ok(PyLut { inner: built.lut })
}

/// Per-pixel operation ledger of the inference kernel.
#[pyfunction]
#[pyo3(signature = (background_removal=true, alignment=false, window=5, bins=4096))]
fn count_flopop<'py>(
    py: Python<'py>,
    background_removal: bool,
    alignment: bool,
    window: usize,
    bins: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let report = count_flopop_core(&codiff::estimator::FlopOptions {
        background_removal,
        alignment,
        window,
        bins,
    });
    let d = PyDict::new_bound(py);
    for (name, n) in &report.items {
        d.set_item(*name, *n)?;
    }
    d.set_item("total", report.total())?;
    d.set_item("guard_compares", report.guard_compares)?;
    Ok(d)
}

#[pymodule]
fn codiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyQuad>()?;
    m.add_class::<PyDepth>()?;
    m.add_class::<PyLut>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_noise, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_lut, m)?)?;
    m.add_function(wrap_pyfunction!(count_flopop, m)?)?;
    Ok(())
}
