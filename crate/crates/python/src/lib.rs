//! Python bindings. Structured results cross the boundary as plain dicts
//! built from the serde representation of the core types.

use nonext_bec::analysis::{self, StatePoint};
use nonext_bec::modes::{self, BandMode, BoxSpec};
use nonext_bec::oracle::{self, ToySystem};
use nonext_bec::partition::{levels_from_shells, EngineChoice, Ensemble, ModelParams, TruncationOptions};
use nonext_bec::thermolimit;
use nonext_bec::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::InvalidRequest(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse<T: DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} {name:?}")))
}

fn box_spec(
    dimension: usize,
    side_length: f64,
    mass: f64,
    cutoff: Option<u32>,
    beta: f64,
    energy_cut: f64,
) -> PyResult<BoxSpec> {
    match cutoff {
        Some(c) => BoxSpec::new(dimension, side_length, mass, c),
        None => BoxSpec::with_thermal_cutoff(dimension, side_length, mass, beta, energy_cut),
    }
    .map_err(err)
}

fn options(engine: &str, tol: f64) -> PyResult<TruncationOptions> {
    Ok(TruncationOptions { engine: parse::<EngineChoice>("engine", engine)?, tol, ..TruncationOptions::default() })
}

/// Momentum shells of a periodic box as a list of dicts.
#[pyfunction]
#[pyo3(signature = (dimension, side_length, cutoff, mass = 1.0))]
fn enumerate_shells(py: Python<'_>, dimension: usize, side_length: f64, cutoff: u32, mass: f64) -> PyResult<Py<PyAny>> {
    let spec = BoxSpec::new(dimension, side_length, mass, cutoff).map_err(err)?;
    to_py(py, &modes::enumerate_shells(&spec).map_err(err)?)
}

/// A grand-canonical ensemble on the shells of a periodic box.
#[pyclass(frozen, name = "Ensemble", module = "nonext_bec")]
struct PyEnsemble {
    inner: Ensemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    #[pyo3(signature = (variant, lam, beta, mu, side_length, cutoff = None, energy_cut = 30.0, dimension = 3, mass = 1.0, engine = "auto", tol = 1e-12))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        variant: &str,
        lam: f64,
        beta: f64,
        mu: f64,
        side_length: f64,
        cutoff: Option<u32>,
        energy_cut: f64,
        dimension: usize,
        mass: f64,
        engine: &str,
        tol: f64,
    ) -> PyResult<Self> {
        let spec = box_spec(dimension, side_length, mass, cutoff, beta, energy_cut)?;
        let params = ModelParams::new(parse("variant", variant)?, lam, beta, mu).map_err(err)?;
        let levels = levels_from_shells(&modes::enumerate_shells(&spec).map_err(err)?);
        let inner = Ensemble::build(&levels, &params, spec.volume(), &options(engine, tol)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn log_z(&self) -> f64 {
        self.inner.log_z()
    }
    #[getter]
    fn pressure(&self) -> f64 {
        self.inner.pressure()
    }
    #[getter]
    fn mean_n(&self) -> f64 {
        self.inner.mean_n()
    }
    #[getter]
    fn var_n(&self) -> f64 {
        self.inner.var_n()
    }
    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }
    #[getter]
    fn tail_mass(&self) -> f64 {
        self.inner.tail_mass()
    }
    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max()
    }
    #[getter]
    fn levels(&self) -> Vec<(f64, u64)> {
        self.inner.levels().iter().map(|l| (l.energy, l.degeneracy)).collect()
    }

    /// `(⟨N_k⟩, ⟨N_k²⟩)` for one mode of the given level.
    fn occupation(&self, level: usize) -> PyResult<(f64, f64)> {
        let o = self.inner.occupation(level).map_err(err)?;
        Ok((o.mean, o.second))
    }

    fn pair(&self, j: usize, k: usize) -> PyResult<f64> {
        self.inner.pair(j, k).map_err(err)
    }

    fn with_total(&self, j: usize) -> PyResult<f64> {
        self.inner.with_total(j).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Ensemble(levels={}, pressure={}, mean_n={})",
            self.inner.levels().len(),
            self.inner.pressure(),
            self.inner.mean_n()
        )
    }
}

/// An evaluated state point with its box and moments.
#[pyclass(frozen, name = "StatePoint", module = "nonext_bec")]
struct PyStatePoint {
    inner: StatePoint,
}

#[pymethods]
impl PyStatePoint {
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.params.mu
    }
    #[getter]
    fn density(&self) -> f64 {
        self.inner.density
    }
    #[getter]
    fn pressure(&self) -> f64 {
        self.inner.pressure()
    }
    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }
    #[getter]
    fn ground_density(&self) -> f64 {
        self.inner.ground_density()
    }
    #[getter]
    fn key(&self) -> String {
        self.inner.key()
    }

    /// Density in the band `|k| < δ` (or `ε < δ`), with the thermal reference.
    #[pyo3(signature = (delta, mode = "k_norm"))]
    fn band(&self, py: Python<'_>, delta: f64, mode: &str) -> PyResult<Py<PyAny>> {
        let b = self.inner.band(delta, parse::<BandMode>("band mode", mode)?).map_err(err)?;
        to_py(py, &b)
    }

    fn moments(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.moments)
    }

    fn __repr__(&self) -> String {
        format!("StatePoint({})", self.inner.key())
    }
}

#[pyfunction]
#[pyo3(signature = (variant, lam, beta, mu, side_length, cutoff = None, energy_cut = 30.0, dimension = 3, mass = 1.0, engine = "auto", tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn evaluate(
    variant: &str,
    lam: f64,
    beta: f64,
    mu: f64,
    side_length: f64,
    cutoff: Option<u32>,
    energy_cut: f64,
    dimension: usize,
    mass: f64,
    engine: &str,
    tol: f64,
) -> PyResult<PyStatePoint> {
    let spec = box_spec(dimension, side_length, mass, cutoff, beta, energy_cut)?;
    let params = ModelParams::new(parse("variant", variant)?, lam, beta, mu).map_err(err)?;
    let inner = analysis::evaluate(&spec, &params, &options(engine, tol)?).map_err(err)?;
    Ok(PyStatePoint { inner })
}

/// The state point whose mean density equals `rho`.
#[pyfunction]
#[pyo3(signature = (variant, lam, beta, rho, side_length, cutoff = None, energy_cut = 30.0, dimension = 3, mass = 1.0, engine = "auto", tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn solve_mu(
    variant: &str,
    lam: f64,
    beta: f64,
    rho: f64,
    side_length: f64,
    cutoff: Option<u32>,
    energy_cut: f64,
    dimension: usize,
    mass: f64,
    engine: &str,
    tol: f64,
) -> PyResult<PyStatePoint> {
    let spec = box_spec(dimension, side_length, mass, cutoff, beta, energy_cut)?;
    let inner =
        analysis::solve_mu(&spec, parse("variant", variant)?, lam, beta, rho, &options(engine, tol)?).map_err(err)?;
    Ok(PyStatePoint { inner })
}

/// Finite-size scaling over a ladder of boxes; `spec` uses the sweep schema.
#[pyfunction]
fn scaling_sweep(py: Python<'_>, spec: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let spec: analysis::SweepSpec = from_py(py, spec)?;
    let report = analysis::scaling_sweep(&spec, &TruncationOptions::default()).map_err(err)?;
    to_py(py, &report)
}

/// Exhaustive enumeration of a toy system given as a dict.
#[pyfunction]
fn enumerate_exact(py: Python<'_>, system: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let system: ToySystem = from_py(py, system)?;
    to_py(py, &oracle::enumerate_exact(&system).map_err(err)?)
}

/// The built-in toy suite checked against the enumeration.
#[pyfunction]
#[pyo3(signature = (cap_flag = 1e-12))]
fn oracle_check(py: Python<'_>, cap_flag: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::oracle_check(&analysis::toy_suite(), cap_flag).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, mass = 1.0, dimension = 3))]
fn bose_pressure(alpha: f64, beta: f64, mass: f64, dimension: usize) -> PyResult<f64> {
    thermolimit::bose_pressure(alpha, beta, mass, dimension).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alpha, beta, mass = 1.0, dimension = 3))]
fn bose_density(alpha: f64, beta: f64, mass: f64, dimension: usize) -> PyResult<f64> {
    thermolimit::bose_density(alpha, beta, mass, dimension).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (beta, mass = 1.0, dimension = 3))]
fn critical_density(beta: f64, mass: f64, dimension: usize) -> PyResult<f64> {
    thermolimit::critical_density(beta, mass, dimension).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, mass = 1.0, dimension = 3))]
fn critical_beta(rho: f64, mass: f64, dimension: usize) -> PyResult<f64> {
    thermolimit::critical_beta(rho, mass, dimension).map_err(err)
}

/// `(p^MF(μ), α*(μ))` of the limiting imperfect gas.
#[pyfunction]
#[pyo3(signature = (mu, lam, beta, mass = 1.0, dimension = 3))]
fn mf_pressure(mu: f64, lam: f64, beta: f64, mass: f64, dimension: usize) -> PyResult<(f64, f64)> {
    let r = thermolimit::mf_pressure(mu, lam, beta, mass, dimension).map_err(err)?;
    Ok((r.pressure, r.alpha_star))
}

#[pyfunction]
#[pyo3(signature = (alpha, mu, lam, beta, rho = 1.0, mass = 1.0, dimension = 3))]
#[allow(clippy::too_many_arguments)]
fn limit_quantities(
    py: Python<'_>,
    alpha: f64,
    mu: f64,
    lam: f64,
    beta: f64,
    rho: f64,
    mass: f64,
    dimension: usize,
) -> PyResult<Py<PyAny>> {
    let q =
        thermolimit::limit_quantities(&thermolimit::LimitInputs { alpha, mu, lambda: lam, beta, mass, dimension, rho })
            .map_err(err)?;
    to_py(py, &q)
}

#[pymodule]
fn _nonext_bec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyStatePoint>()?;
    m.add_function(wrap_pyfunction!(enumerate_shells, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_mu, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_exact, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(bose_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(bose_density, m)?)?;
    m.add_function(wrap_pyfunction!(critical_density, m)?)?;
    m.add_function(wrap_pyfunction!(critical_beta, m)?)?;
    m.add_function(wrap_pyfunction!(mf_pressure, m)?)?;
    m.add_function(wrap_pyfunction!(limit_quantities, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
