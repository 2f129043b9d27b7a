//! Python bindings: probe construction, sensitivities, Fisher information,
//! closed-form limits and the validation suite.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tpa_core::fock::{FockCutoff, DEFAULT_CUTOFF_CAP, DEFAULT_TAIL_TOL};
use tpa_core::metrology::{self, Observable};
use tpa_core::validate::{run_validate, CheckStatus, ValidateOptions};
use tpa_core::{QuadGridSpec, TpaError, C64};

fn py_err(e: TpaError) -> PyErr {
    match e {
        TpaError::InvalidParameter(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn observable(name: &str) -> PyResult<Observable> {
    name.parse().map_err(py_err)
}

fn cutoff(tail_tol: f64, cap: usize) -> PyResult<FockCutoff> {
    Ok(FockCutoff::adaptive(tail_tol)
        .map_err(py_err)?
        .with_cap(cap))
}

/// Squeezed coherent probe `S(ζ)D(α)|0⟩` with `ζ = r·e^{iφ_r}` and `α = |α|·e^{iφ}`.
#[pyclass(frozen, module = "tpa")]
#[derive(Clone, Copy)]
struct ProbeSpec(tpa_core::ProbeSpec);

#[pymethods]
impl ProbeSpec {
    #[new]
    #[pyo3(signature = (r=0.0, phi_r=0.0, alpha=0.0, phi=0.0))]
    fn new(r: f64, phi_r: f64, alpha: f64, phi: f64) -> PyResult<Self> {
        tpa_core::ProbeSpec::new(r, phi_r, alpha, phi)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn squeezed_vacuum(n_r: f64) -> PyResult<Self> {
        tpa_core::ProbeSpec::squeezed_vacuum_photons(n_r)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (nbar, phi=0.0))]
    fn coherent(nbar: f64, phi: f64) -> PyResult<Self> {
        tpa_core::ProbeSpec::coherent_photons(nbar, phi)
            .map(Self)
            .map_err(py_err)
    }

    /// Squeezed coherent probe with `n_total` incident photons, `n_r` of them
    /// from squeezing.
    #[staticmethod]
    fn with_incident_photons(n_total: f64, n_r: f64, phi: f64) -> PyResult<Self> {
        tpa_core::ProbeSpec::with_incident_photons(n_total, n_r, phi)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn r(&self) -> f64 {
        self.0.r()
    }

    #[getter]
    fn phi_r(&self) -> f64 {
        self.0.phi_r()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha_abs()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi()
    }

    fn incident_photons(&self) -> f64 {
        self.0.incident_photons()
    }

    fn __repr__(&self) -> String {
        format!(
            "ProbeSpec(r={}, phi_r={}, alpha={}, phi={})",
            self.0.r(),
            self.0.phi_r(),
            self.0.alpha_abs(),
            self.0.phi()
        )
    }
}

/// Single-photon loss with transmission `eta`.
#[pyclass(frozen, module = "tpa")]
#[derive(Clone, Copy)]
struct LossSpec(tpa_core::LossSpec);

#[pymethods]
impl LossSpec {
    #[new]
    #[pyo3(signature = (eta=1.0))]
    fn new(eta: f64) -> PyResult<Self> {
        tpa_core::LossSpec::new(eta).map(Self).map_err(py_err)
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta()
    }

    fn __repr__(&self) -> String {
        format!("LossSpec(eta={})", self.0.eta())
    }
}

/// Fock amplitudes of the probe, grown until the dropped population is below `tail_tol`.
#[pyfunction]
#[pyo3(signature = (spec, tail_tol=DEFAULT_TAIL_TOL, cap=DEFAULT_CUTOFF_CAP))]
fn make_probe_state(spec: &ProbeSpec, tail_tol: f64, cap: usize) -> PyResult<Vec<C64>> {
    let s = tpa_core::make_probe_state(&spec.0, &cutoff(tail_tol, cap)?).map_err(py_err)?;
    Ok(s.amplitudes().to_vec())
}

/// `Δε²` from error propagation; `None` when the signal slope vanishes.
#[pyfunction]
#[pyo3(signature = (spec, loss, observable, analytic=false, tail_tol=DEFAULT_TAIL_TOL, cap=DEFAULT_CUTOFF_CAP))]
fn sensitivity(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: &str,
    analytic: bool,
    tail_tol: f64,
    cap: usize,
) -> PyResult<Option<f64>> {
    let obs = self::observable(observable)?;
    let s = if analytic {
        metrology::sensitivity_analytic(&spec.0, &loss.0, obs)
    } else {
        metrology::sensitivity_numeric(&spec.0, &loss.0, obs, &cutoff(tail_tol, cap)?)
            .map_err(py_err)?
    };
    Ok(s.delta_eps_sq())
}

/// Classical Fisher information of the measurement at `ε = 0`.
#[pyfunction]
#[pyo3(signature = (spec, loss, observable, tail_tol=DEFAULT_TAIL_TOL, cap=DEFAULT_CUTOFF_CAP))]
fn fisher(
    spec: &ProbeSpec,
    loss: &LossSpec,
    observable: &str,
    tail_tol: f64,
    cap: usize,
) -> PyResult<f64> {
    let obs = self::observable(observable)?;
    metrology::fisher_numeric(
        &spec.0,
        &loss.0,
        obs,
        &cutoff(tail_tol, cap)?,
        &QuadGridSpec::default(),
    )
    .map(|f| f.fi)
    .map_err(py_err)
}

/// Closed-form sensitivity limits as a list of dicts.
#[pyfunction]
#[pyo3(signature = (r, n, eta=1.0, phi=0.0))]
fn limit_table<'py>(
    py: Python<'py>,
    r: f64,
    n: f64,
    eta: f64,
    phi: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    metrology::limit_table(r, n, eta, phi)
        .map_err(py_err)?
        .into_iter()
        .map(|row| {
            let d = PyDict::new_bound(py);
            d.set_item("observable", row.observable.as_str())?;
            d.set_item("state", row.state)?;
            d.set_item("regime", format!("{:?}", row.regime))?;
            d.set_item("value", row.value)?;
            d.set_item("applicable", row.applicable)?;
            d.set_item("probe", ProbeSpec(row.probe).into_py(py))?;
            Ok(d)
        })
        .collect()
}

/// Runs the consistency checks; returns `(passed, [(name, status, detail), ...])`.
#[pyfunction]
#[pyo3(signature = (eta=None, seed=None))]
fn validate(
    py: Python<'_>,
    eta: Option<f64>,
    seed: Option<u64>,
) -> PyResult<(bool, Vec<(String, &'static str, String)>)> {
    let mut opts = ValidateOptions::default();
    if let Some(eta) = eta {
        tpa_core::LossSpec::new(eta).map_err(py_err)?;
        opts.eta = eta;
    }
    if let Some(seed) = seed {
        opts.seed = seed;
    }
    let report = py.allow_threads(|| run_validate(&opts));
    let checks = report
        .checks
        .iter()
        .map(|c| {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::NotApplicable => "not_applicable",
            };
            (c.name.clone(), status, c.detail.clone())
        })
        .collect();
    Ok((report.passed(), checks))
}

#[pymodule]
fn tpa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ProbeSpec>()?;
    m.add_class::<LossSpec>()?;
    m.add_function(wrap_pyfunction!(make_probe_state, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(fisher, m)?)?;
    m.add_function(wrap_pyfunction!(limit_table, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
