//! Python module `bielliptic`. Structured results cross the boundary as
//! JSON and come back as plain dicts and lists.

use bielliptic_jets::config::CaseLabel;
use bielliptic_jets::engine::{certify_r1 as core_certify_r1, Engine};
use bielliptic_jets::genus::{self, CurveCandidate};
use bielliptic_jets::lattice::DivisorClass as CoreClass;
use bielliptic_jets::lp::{self, LinearSystem};
use bielliptic_jets::report::{self, Libraries, Mode, NullSink, RunConfig};
use bielliptic_jets::surface;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: bielliptic_jets::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A numerical class `(a, b)` in the basis `A/mu, (mu/gamma) B`.
#[pyclass(name = "DivisorClass", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PyDivisorClass(CoreClass);

#[pymethods]
impl PyDivisorClass {
    #[new]
    fn new(a: i64, b: i64) -> Self {
        PyDivisorClass(CoreClass::new(a, b))
    }

    #[getter]
    fn a(&self) -> i64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> i64 {
        self.0.b
    }

    fn intersect(&self, other: &PyDivisorClass) -> PyResult<i64> {
        self.0.intersect(&other.0).map_err(err)
    }

    fn self_intersection(&self) -> PyResult<i64> {
        self.0.self_intersection().map_err(err)
    }

    fn chi(&self) -> PyResult<i64> {
        self.0.chi().map_err(err)
    }

    fn is_ample(&self) -> bool {
        self.0.is_ample()
    }

    fn h0_ample(&self) -> PyResult<i64> {
        self.0.h0_ample().map_err(err)
    }

    fn __add__(&self, other: &PyDivisorClass) -> PyResult<Self> {
        self.0.checked_add(&other.0).map(PyDivisorClass).map_err(err)
    }

    fn __sub__(&self, other: &PyDivisorClass) -> PyResult<Self> {
        self.0.checked_sub(&other.0).map(PyDivisorClass).map_err(err)
    }

    fn __mul__(&self, n: i64) -> PyResult<Self> {
        self.0.checked_scale(n).map(PyDivisorClass).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DivisorClass({}, {})", self.0.a, self.0.b)
    }
}

#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Py<PyAny>> {
    to_py(py, &surface::catalog_entries())
}

#[pyfunction]
fn is_vertical_effective(type_id: u32, b: i64) -> PyResult<bool> {
    Ok(surface::surface(type_id).map_err(err)?.is_vertical_effective(b))
}

#[pyfunction]
fn genus_admissible(a: i64, b: i64, mults: Vec<u32>) -> bool {
    genus::genus_admissible(&CurveCandidate { cls: CoreClass::new(a, b), mults })
}

#[pyfunction]
fn max_single_multiplicity(a: i64, b: i64) -> PyResult<u32> {
    genus::max_single_multiplicity(&CoreClass::new(a, b)).map_err(err)
}

#[pyfunction]
fn enumerate_admissible(a: i64, b: i64, r: usize, cap: u32) -> PyResult<Vec<Vec<u32>>> {
    genus::enumerate_admissible(&CoreClass::new(a, b), r, cap).map_err(err)
}

/// Recomputed multiplicity table together with its diff against the
/// golden copy.
#[pyfunction]
fn lemma_table(py: Python<'_>) -> PyResult<Py<PyAny>> {
    let rows = report::recompute_lemma_table().map_err(err)?;
    let diff = report::diff_lemma_table(&report::golden_lemma_table(), &rows);
    to_py(py, &serde_json::json!({ "rows": rows, "diff": diff }))
}

#[pyfunction]
fn certify_r1(py: Python<'_>, k: u32) -> PyResult<Py<PyAny>> {
    to_py(py, &core_certify_r1(k).map_err(err)?)
}

/// Summary of a verification run, e.g. `verify("all", "2..4")`. `base`
/// overrides the line bundle, as in `"k+1,k+2"`.
#[pyfunction]
#[pyo3(signature = (types="all", k="2..4", r_max=None, base=None))]
fn verify(py: Python<'_>, types: &str, k: &str, r_max: Option<usize>, base: Option<&str>) -> PyResult<Py<PyAny>> {
    let mut cfg = RunConfig::new(Mode::Verify);
    cfg.surface_types = report::parse_types(types).map_err(err)?;
    (cfg.k_min, cfg.k_max) = report::parse_k_range(k).map_err(err)?;
    cfg.r_max = r_max;
    cfg.class = base.map(report::parse_class).transpose().map_err(err)?;
    cfg.validate().map_err(err)?;
    let summary = py
        .detach(|| {
            let engine = Engine::new();
            let mut libs = Libraries::new(cfg.k_max);
            report::run_verify(&cfg, &engine, &mut libs, &mut NullSink)
        })
        .map_err(err)?;
    to_py(py, &summary)
}

/// Decides a linear implication given as JSON with keys `variables`,
/// `constraints` and `target`.
#[pyfunction]
fn entails(py: Python<'_>, system_json: &str) -> PyResult<Py<PyAny>> {
    let sys: LinearSystem = serde_json::from_str(system_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &lp::entails(&sys).map_err(err)?)
}

#[pyfunction]
fn case_labels() -> Vec<&'static str> {
    CaseLabel::ALL.iter().map(|l| l.name()).collect()
}

#[pymodule]
fn bielliptic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", report::SCHEMA_VERSION)?;
    m.add_class::<PyDivisorClass>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(is_vertical_effective, m)?)?;
    m.add_function(wrap_pyfunction!(genus_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(max_single_multiplicity, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_table, m)?)?;
    m.add_function(wrap_pyfunction!(certify_r1, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(entails, m)?)?;
    m.add_function(wrap_pyfunction!(case_labels, m)?)?;
    Ok(())
}
