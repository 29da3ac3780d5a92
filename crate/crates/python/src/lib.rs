//! Python bindings for the scatiris pipeline: synthetic corpus generation,
//! feature extraction, PCA, and minimum-distance identification.

use pyo3::exceptions::{PyFileNotFoundError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use scatiris::corpus;
use scatiris::features;
use scatiris::matcher;
use scatiris::pipeline;

fn to_py_err(err: scatiris::Error) -> PyErr {
    match &err {
        scatiris::Error::FileNotFound(_) => PyFileNotFoundError::new_err(err.to_string()),
        scatiris::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        scatiris::Error::ComplexEigenvalues { .. } => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPyResult<T> {
    fn into_py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for scatiris::Result<T> {
    fn into_py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// Grayscale image with intensities in [0, 1].
#[pyclass(name = "GrayImage")]
struct PyGrayImage {
    inner: scatiris::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: scatiris::GrayImage::new(width, height, values).into_py()?,
        })
    }

    /// Loads a binary 8-bit PGM (P5) file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: scatiris::load_image(path, scatiris::ColorPolicy::Reject).into_py()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        scatiris::save_pgm(&self.inner, path).into_py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn resized(&self, width: usize, height: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.resize_bilinear(width, height).into_py()?,
        })
    }

    fn shifted(&self, dx: isize, dy: isize) -> Self {
        Self {
            inner: self.inner.shifted_circular(dx, dy),
        }
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Pipeline configuration; defaults reproduce the reference setup
/// (64x48, J=5, p=6, m=2, 4x3 texture grid, 950 features).
#[pyclass(name = "PipelineConfig", from_py_object)]
#[derive(Clone)]
struct PyPipelineConfig {
    inner: pipeline::PipelineConfig,
}

#[pymethods]
impl PyPipelineConfig {
    #[new]
    #[pyo3(signature = (
        width=64, height=48, scales=5, orientations=6, max_layer=2,
        texture=true, grid=(4, 3), levels=8, offset=(1, 0),
        epsilon=0.99, components=None, standardize=false, seed=42, luma=false
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        width: usize,
        height: usize,
        scales: u32,
        orientations: u32,
        max_layer: u32,
        texture: bool,
        grid: (usize, usize),
        levels: usize,
        offset: (i32, i32),
        epsilon: f64,
        components: Option<usize>,
        standardize: bool,
        seed: u64,
        luma: bool,
    ) -> PyResult<Self> {
        let inner = pipeline::PipelineConfig {
            width,
            height,
            luma_conversion: luma,
            scattering: scatiris::ScatteringConfig {
                scales,
                orientations,
                max_layer,
            },
            texture: pipeline::TextureConfig {
                enabled: texture,
                grid: scatiris::BlockGrid::new(grid.0, grid.1),
                levels,
                offset,
            },
            pca: pipeline::PcaConfig {
                epsilon,
                components,
                standardize,
            },
            seed,
        };
        inner.validate().into_py()?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: pipeline::PipelineConfig::from_toml_str(text).into_py()?,
        })
    }

    /// Expected feature dimensionality under this configuration.
    fn feature_len(&self) -> usize {
        self.inner.feature_len()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "PipelineConfig({}x{}, J={}, p={}, m={}, features={})",
            self.inner.width,
            self.inner.height,
            self.inner.scattering.scales,
            self.inner.scattering.orientations,
            self.inner.scattering.max_layer,
            self.inner.feature_len()
        )
    }
}

/// Per-image feature extractor; builds the filter bank once.
#[pyclass(name = "FeatureExtractor")]
struct PyFeatureExtractor {
    inner: pipeline::FeatureExtractor,
}

#[pymethods]
impl PyFeatureExtractor {
    #[new]
    fn new(config: PyPipelineConfig) -> PyResult<Self> {
        Ok(Self {
            inner: pipeline::FeatureExtractor::new(config.inner).into_py()?,
        })
    }

    /// Concatenated feature vector (scattering block first).
    fn extract(&self, img: &PyGrayImage) -> PyResult<Vec<f64>> {
        Ok(self.inner.extract(&img.inner).into_py()?.values().to_vec())
    }

    /// `(scatter_len, texture_len)` under this configuration.
    fn layout(&self) -> (usize, usize) {
        let total = self.inner.config().feature_len();
        let texture = if self.inner.config().texture.enabled {
            14 * self.inner.config().texture.grid.block_count()
        } else {
            0
        };
        (total - texture, texture)
    }
}

/// Projection of one feature vector, bound to its model.
#[pyclass(name = "ReducedVector", from_py_object)]
#[derive(Clone)]
struct PyReducedVector {
    inner: features::ReducedVector,
}

#[pymethods]
impl PyReducedVector {
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn fingerprint(&self) -> [u8; 16] {
        self.inner.fingerprint()
    }
}

/// PCA model: mean + ordered eigensystem of the training covariance.
#[pyclass(name = "PcaModel")]
struct PyPcaModel {
    inner: features::PcaModel,
}

#[pymethods]
impl PyPcaModel {
    /// Fits on rows of equal dimension (requires at least two samples).
    #[staticmethod]
    #[pyo3(signature = (rows, standardize=false))]
    fn fit(rows: Vec<Vec<f64>>, standardize: bool) -> PyResult<Self> {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let inner = features::PcaModel::fit_rows(
            &refs,
            features::FitOptions {
                standardize,
                ..features::FitOptions::default()
            },
        )
        .into_py()?;
        Ok(Self { inner })
    }

    fn project(&self, values: Vec<f64>, k: usize) -> PyResult<PyReducedVector> {
        Ok(PyReducedVector {
            inner: self.inner.project_values(&values, k).into_py()?,
        })
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    fn retained_variance(&self, k: usize) -> PyResult<f64> {
        self.inner.retained_variance(k).into_py()
    }

    fn choose_k(&self, epsilon: f64) -> PyResult<usize> {
        self.inner.choose_k(epsilon).into_py()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn fingerprint(&self) -> [u8; 16] {
        self.inner.fingerprint()
    }

    #[pyo3(signature = (path, config_json="{}"))]
    fn save(&self, path: &str, config_json: &str) -> PyResult<()> {
        scatiris::persist::save_model(&self.inner, config_json, path).into_py()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<(Self, String)> {
        let (inner, config) = scatiris::persist::load_model(path).into_py()?;
        Ok((Self { inner }, config))
    }
}

/// Enrolled template store for minimum-distance identification.
#[pyclass(name = "Gallery")]
struct PyGallery {
    inner: matcher::Gallery,
}

#[pymethods]
impl PyGallery {
    #[new]
    fn new() -> Self {
        Self {
            inner: matcher::Gallery::new(),
        }
    }

    fn enroll(&mut self, subject: &str, template: &PyReducedVector) -> PyResult<()> {
        self.inner.enroll(subject, &template.inner).into_py()
    }

    /// Nearest-template decision: `(subject, distance, runner_up)`.
    fn identify(&self, probe: &PyReducedVector) -> PyResult<(String, f64, Option<f64>)> {
        let r = matcher::identify(&self.inner, &probe.inner).into_py()?;
        Ok((r.subject, r.distance, r.runner_up))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn subjects(&self) -> Vec<String> {
        self.inner
            .subjects()
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[pyo3(signature = (path, config_json="{}"))]
    fn save(&self, path: &str, config_json: &str) -> PyResult<()> {
        scatiris::persist::save_gallery(&self.inner, config_json, path).into_py()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<(Self, String)> {
        let (inner, config) = scatiris::persist::load_gallery(path).into_py()?;
        Ok((Self { inner }, config))
    }
}

/// Number of scattering maps: `sum_{k=0}^{m} p^k * C(J, k)`.
#[pyfunction]
fn scattering_path_count(scales: u32, orientations: u32, max_layer: u32) -> PyResult<usize> {
    let cfg = scatiris::ScatteringConfig::new(scales, orientations, max_layer).into_py()?;
    Ok(scatiris::scattering_path_count(&cfg))
}

/// Writes a synthetic corpus plus a split manifest; returns
/// `(path, subject, split)` tuples relative to `out_dir`.
#[pyfunction]
#[pyo3(signature = (out_dir, classes=10, per_class=10, width=64, height=48,
                    noise=0.05, seed=42, train_fraction=0.5))]
#[allow(clippy::too_many_arguments)]
fn synth_corpus(
    out_dir: &str,
    classes: usize,
    per_class: usize,
    width: usize,
    height: usize,
    noise: f64,
    seed: u64,
    train_fraction: f64,
) -> PyResult<Vec<(String, String, String)>> {
    let spec =
        corpus::SyntheticSpec::new(classes, per_class, width, height, noise, seed).into_py()?;
    let manifest = corpus::generate_synthetic(&spec, out_dir).into_py()?;
    let manifest = corpus::split_dataset(&manifest, train_fraction, seed).into_py()?;
    manifest
        .save(std::path::Path::new(out_dir).join("manifest.tsv"))
        .into_py()?;
    Ok(manifest
        .entries()
        .iter()
        .map(|e| {
            (
                e.path.to_string_lossy().into_owned(),
                e.subject.clone(),
                e.split.to_string(),
            )
        })
        .collect())
}

/// Rank-1 evaluation of labelled probes; returns the report as JSON.
#[pyfunction]
fn evaluate_json(
    gallery: &PyGallery,
    probes: Vec<(String, PyReducedVector)>,
    k_grid: Vec<usize>,
) -> PyResult<String> {
    let probes: Vec<(String, features::ReducedVector)> = probes
        .into_iter()
        .map(|(subject, rv)| (subject, rv.inner))
        .collect();
    let report = matcher::evaluate(&gallery.inner, &probes, &k_grid).into_py()?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn scatiris_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyPipelineConfig>()?;
    m.add_class::<PyFeatureExtractor>()?;
    m.add_class::<PyReducedVector>()?;
    m.add_class::<PyPcaModel>()?;
    m.add_class::<PyGallery>()?;
    m.add_function(wrap_pyfunction!(scattering_path_count, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_json, m)?)?;
    Ok(())
}
