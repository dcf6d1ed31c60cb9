//! Python bindings for `npmix`.
//!
//! Models and configurations cross the boundary as JSON text in the same
//! format the command line reads; samples and curves come back as lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use npmix::measures::{wasserstein1, DiscreteMeasure, GridDensity, GridSpec};
use npmix::mixfit::{evaluate_mixture_fit, fit_vanilla_mixture, MixtureConfig, MixtureFit};
use npmix::regfit::{
    evaluate_regression_fit, find_separation_point, fit_mixed_regression, RegressionConfig, RegressionFit,
};
use npmix::synth::{
    sample_mixed_regression, sample_vanilla_mixture, Dataset, MixedRegressionModel, MixingSpec, VanillaMixtureModel,
};
use npmix::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Parameter(_)
        | Error::Model(_)
        | Error::InvalidInput(_)
        | Error::InvalidMeasure(_)
        | Error::Domain(_)
        | Error::Grid(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn config<T: serde::de::DeserializeOwned + Default>(text: Option<&str>, what: &str) -> PyResult<T> {
    text.map_or_else(|| Ok(T::default()), |t| from_json(t, what))
}

fn curve(d: &GridDensity) -> (Vec<f64>, Vec<f64>) {
    (d.points(), d.values().to_vec())
}

/// Vanilla mixture `Σ λₖ · φ_σ ∗ Gₖ(· − μₖ)`.
#[pyclass(name = "VanillaMixture", module = "pynpmix", frozen)]
struct PyVanillaMixture {
    inner: VanillaMixtureModel,
}

#[pymethods]
impl PyVanillaMixture {
    /// Point-mass components at `mus`.
    #[new]
    fn new(lambdas: Vec<f64>, mus: Vec<f64>, sigma: f64) -> PyResult<Self> {
        let gks = vec![MixingSpec::default(); lambdas.len()];
        let inner = VanillaMixtureModel::new(lambdas, mus, sigma, gks).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: from_json(text, "vanilla mixture")?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    #[getter]
    fn mus(&self) -> Vec<f64> {
        self.inner.mus().to_vec()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        let model = self.inner.clone();
        py.detach(move || sample_vanilla_mixture(&model, n, seed))
            .map_err(to_py)
    }

    /// Mixture density on `n_points` equally spaced points of `[lo, hi]`.
    fn density(&self, lo: f64, hi: f64, n_points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let grid = GridSpec::new(lo, hi, n_points).map_err(to_py)?;
        Ok(curve(&self.inner.density(&grid).map_err(to_py)?))
    }

    fn cdf(&self, y: f64) -> PyResult<f64> {
        self.inner.cdf(y).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "VanillaMixture(lambdas={:?}, mus={:?}, sigma={})",
            self.inner.lambdas(),
            self.inner.mus(),
            self.inner.sigma()
        )
    }
}

/// Mixed regression `Y = m_{Z}(X) + ε`.
#[pyclass(name = "MixedRegression", module = "pynpmix", frozen)]
struct PyMixedRegression {
    inner: MixedRegressionModel,
}

#[pymethods]
impl PyMixedRegression {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: from_json(text, "mixed regression")?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0()
    }

    fn regression_values(&self, x: f64) -> Vec<f64> {
        self.inner.regression_values(x)
    }

    /// Returns `(xs, ys)`.
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let model = self.inner.clone();
        let data = py
            .detach(move || sample_mixed_regression(&model, n, seed))
            .map_err(to_py)?;
        Ok((data.covariates(), data.responses()))
    }

    fn conditional_cdf(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.conditional_cdf(x, y).map_err(to_py)
    }
}

#[pyclass(name = "MixtureFit", module = "pynpmix", frozen)]
struct PyMixtureFit {
    inner: MixtureFit,
}

#[pymethods]
impl PyMixtureFit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: from_json(text, "mixture fit")?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    /// Weights, ascending.
    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas_hat.clone()
    }

    #[getter]
    fn mus(&self) -> Vec<f64> {
        self.inner.mus_hat.clone()
    }

    /// Atoms `(location, mass)` of the estimated mixing measure.
    #[getter]
    fn mixing_atoms(&self) -> Vec<(f64, f64)> {
        self.inner.g_hat.atoms().to_vec()
    }

    /// Centered density of component `k` as `(ys, values)`.
    fn component(&self, k: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.inner
            .f_hats
            .get(k)
            .map(curve)
            .ok_or_else(|| PyValueError::new_err(format!("component {k} out of range")))
    }

    /// Returns `lambda_error`, `f_errors`, `max_f_error` and `w1`.
    fn evaluate(&self, truth: &PyVanillaMixture) -> PyResult<(f64, Vec<f64>, f64, f64)> {
        let e = evaluate_mixture_fit(&self.inner, &truth.inner).map_err(to_py)?;
        Ok((e.lambda_error, e.f_errors, e.max_f_error, e.w1))
    }

    fn __repr__(&self) -> String {
        format!("MixtureFit(k={}, lambdas={:?})", self.inner.k, self.inner.lambdas_hat)
    }
}

#[pyclass(name = "RegressionFit", module = "pynpmix", frozen)]
struct PyRegressionFit {
    inner: RegressionFit,
}

#[pymethods]
impl PyRegressionFit {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: from_json(text, "regression fit")?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas().to_vec()
    }

    #[getter]
    fn x_grid(&self) -> Vec<f64> {
        self.inner.x_grid.clone()
    }

    /// One curve per component, on `x_grid`.
    #[getter]
    fn m_hat(&self) -> Vec<Vec<f64>> {
        self.inner.m_hat.clone()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0_used
    }

    #[getter]
    fn error_density(&self) -> (Vec<f64>, Vec<f64>) {
        curve(&self.inner.f_hat)
    }

    /// Returns `max_mean_abs_error`, `lambda_error`, `f_error`,
    /// `best_permutation_error` and `pointwise_permutation_error`.
    fn evaluate(&self, truth: &PyMixedRegression) -> PyResult<(f64, f64, f64, f64, f64)> {
        let e = evaluate_regression_fit(&self.inner, &truth.inner).map_err(to_py)?;
        Ok((
            e.max_mean_abs_error,
            e.lambda_error,
            e.f_error,
            e.best_permutation_error,
            e.pointwise_permutation_error,
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "RegressionFit(k={}, lambdas={:?}, x0={})",
            self.inner.k,
            self.inner.lambdas(),
            self.inner.x0_used
        )
    }
}

/// Fits a `k`-component nonparametric mixture to responses `ys`.
#[pyfunction]
#[pyo3(signature = (ys, k, sigma, config=None))]
fn fit_mixture(py: Python<'_>, ys: Vec<f64>, k: usize, sigma: f64, config: Option<&str>) -> PyResult<PyMixtureFit> {
    let cfg: MixtureConfig = self::config(config, "mixture config")?;
    let inner = py
        .detach(move || fit_vanilla_mixture(&ys, k, sigma, &cfg))
        .map_err(to_py)?;
    Ok(PyMixtureFit { inner })
}

/// Fits a `k`-component mixed regression; `x0` is searched for when omitted.
#[pyfunction]
#[pyo3(signature = (xs, ys, k, sigma, x0=None, config=None))]
fn fit_regression(
    py: Python<'_>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    k: usize,
    sigma: f64,
    x0: Option<f64>,
    config: Option<&str>,
) -> PyResult<PyRegressionFit> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err(format!(
            "{} covariates for {} responses",
            xs.len(),
            ys.len()
        )));
    }
    let cfg: RegressionConfig = self::config(config, "regression config")?;
    let data = Dataset::new(xs.into_iter().zip(ys).collect(), 0, None);
    let inner = py
        .detach(move || fit_mixed_regression(&data, k, sigma, x0, &cfg))
        .map_err(to_py)?;
    Ok(PyRegressionFit { inner })
}

/// Covariate where the `k` clusters of responses are furthest apart,
/// with the scanned profile as `(x, sep)` pairs.
#[pyfunction]
fn find_separation(xs: Vec<f64>, ys: Vec<f64>, k: usize, window: f64) -> PyResult<(f64, Vec<(f64, f64)>)> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err(format!(
            "{} covariates for {} responses",
            xs.len(),
            ys.len()
        )));
    }
    let data = Dataset::new(xs.into_iter().zip(ys).collect(), 0, None);
    let s = find_separation_point(&data, k, window).map_err(to_py)?;
    Ok((s.x_star, s.profile.iter().map(|p| (p.x, p.sep)).collect()))
}

/// Box-kernel density estimate on `n_points` points of `[lo, hi]`.
#[pyfunction]
fn kde(samples: Vec<f64>, h: f64, lo: f64, hi: f64, n_points: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let grid = GridSpec::new(lo, hi, n_points).map_err(to_py)?;
    Ok(curve(&npmix::kde::univariate_kde(&samples, h, &grid).map_err(to_py)?))
}

/// `W₁` between two probability measures given as `(location, mass)` atoms.
#[pyfunction]
fn w1(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> PyResult<f64> {
    let a = DiscreteMeasure::new(a).map_err(to_py)?;
    let b = DiscreteMeasure::new(b).map_err(to_py)?;
    wasserstein1(&a, &b).map_err(to_py)
}

#[pymodule]
fn pynpmix(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyVanillaMixture>()?;
    m.add_class::<PyMixedRegression>()?;
    m.add_class::<PyMixtureFit>()?;
    m.add_class::<PyRegressionFit>()?;
    m.add_function(wrap_pyfunction!(fit_mixture, m)?)?;
    m.add_function(wrap_pyfunction!(fit_regression, m)?)?;
    m.add_function(wrap_pyfunction!(find_separation, m)?)?;
    m.add_function(wrap_pyfunction!(kde, m)?)?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    Ok(())
}
