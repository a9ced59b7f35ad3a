//! Python bindings: jets, expressions, scenarios and check reports.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use sheafgauge::frontend::{self, CheckSet, Entry, FrontendError, Report, Scenario};
use sheafgauge::jets::Jet;

fn frontend_err(e: FrontendError) -> PyErr {
    match e {
        FrontendError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// First-order jet: a value with its partial derivatives.
#[pyclass(name = "Jet", module = "sheafgauge", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyJet(Jet);

impl PyJet {
    fn operand(&self, other: &Bound<'_, PyAny>) -> PyResult<Jet> {
        if let Ok(j) = other.extract::<PyJet>() {
            if j.0.dim() != self.0.dim() {
                return Err(PyValueError::new_err(format!(
                    "jet dimension mismatch: {} vs {}",
                    self.0.dim(),
                    j.0.dim()
                )));
            }
            return Ok(j.0);
        }
        let k: f64 = other.extract()?;
        Ok(Jet::constant(k, self.0.dim()))
    }
}

#[pymethods]
impl PyJet {
    #[new]
    #[pyo3(signature = (value, grad = Vec::new()))]
    fn new(value: f64, grad: Vec<f64>) -> Self {
        PyJet(Jet::new(value, grad))
    }

    /// Coordinate function `axis` of a `dim`-dimensional chart, at `value`.
    #[staticmethod]
    #[pyo3(signature = (value, dim = 1, axis = 0))]
    fn variable(value: f64, dim: usize, axis: usize) -> PyResult<Self> {
        if axis >= dim {
            return Err(PyValueError::new_err(format!("axis {axis} out of range for dimension {dim}")));
        }
        Ok(PyJet(Jet::variable(value, dim, axis)))
    }

    #[getter]
    fn value(&self) -> f64 {
        self.0.value
    }

    #[getter]
    fn grad(&self) -> Vec<f64> {
        self.0.grad.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn sin(&self) -> Self {
        PyJet(self.0.sin())
    }

    fn cos(&self) -> Self {
        PyJet(self.0.cos())
    }

    fn exp(&self) -> Self {
        PyJet(self.0.exp())
    }

    fn recip(&self) -> Self {
        PyJet(self.0.recip())
    }

    fn powi(&self, n: i32) -> Self {
        PyJet(self.0.powi(n))
    }

    fn distance(&self, other: &Bound<'_, PyAny>) -> PyResult<f64> {
        Ok(self.0.distance(&self.operand(other)?))
    }

    fn __add__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.0 + &self.operand(other)?))
    }

    fn __radd__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.operand(other)? + &self.0))
    }

    fn __sub__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.0 - &self.operand(other)?))
    }

    fn __rsub__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.operand(other)? - &self.0))
    }

    fn __mul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.0 * &self.operand(other)?))
    }

    fn __rmul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.operand(other)? * &self.0))
    }

    fn __truediv__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.0 / &self.operand(other)?))
    }

    fn __rtruediv__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyJet(&self.operand(other)? / &self.0))
    }

    fn __neg__(&self) -> Self {
        PyJet(-&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Jet({:?}, {:?})", self.0.value, self.0.grad)
    }
}

/// Parsed expression in the scenario language, in the variable `t`.
#[pyclass(name = "Expr", module = "sheafgauge", frozen)]
pub struct PyExpr(frontend::Expr);

#[pymethods]
impl PyExpr {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        frontend::parse_expr(src).map(PyExpr).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Value and derivative at `t`.
    fn eval(&self, t: f64) -> PyResult<PyJet> {
        self.0.eval(t).map(PyJet).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Composition with an arbitrary jet.
    fn eval_jet(&self, t: PyJet) -> PyResult<PyJet> {
        self.0.eval_jet(&t.0).map(PyJet).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.0.to_string())
    }
}

/// A scenario: cover, group, cocycle, representation and seed connection.
#[pyclass(name = "Scenario", module = "sheafgauge", frozen)]
pub struct PyScenario(Scenario);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Scenario::load(&path).map(PyScenario).map_err(frontend_err)
    }

    #[staticmethod]
    #[pyo3(signature = (src, name = "scenario"))]
    fn from_str(src: &str, name: &str) -> PyResult<Self> {
        Scenario::parse(src, name).map(PyScenario).map_err(frontend_err)
    }

    #[staticmethod]
    fn demo(name: &str) -> PyResult<Self> {
        frontend::demo(name).map(PyScenario).map_err(frontend_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }

    #[getter]
    fn points(&self) -> usize {
        self.0.points
    }

    #[getter]
    fn representation(&self) -> String {
        self.0.representation.to_string()
    }

    /// Runs the selected suites: "all", "none" or a comma-separated list.
    #[pyo3(signature = (suites = "all", strict = false))]
    fn run_checks(&self, suites: &str, strict: bool) -> PyResult<PyReport> {
        let which: CheckSet = suites.parse().map_err(PyValueError::new_err)?;
        frontend::run_checks(&self.0, &which, strict).map(PyReport).map_err(frontend_err)
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.0.name)
    }
}

/// One row of a report.
#[pyclass(name = "Entry", module = "sheafgauge", frozen, get_all)]
pub struct PyEntry {
    name: String,
    status: String,
    residual: Option<f64>,
    point: Option<usize>,
    tolerance: f64,
    note: Option<String>,
}

impl From<&Entry> for PyEntry {
    fn from(e: &Entry) -> Self {
        PyEntry {
            name: e.name.to_string(),
            status: e.status.to_string(),
            residual: e.residual,
            point: e.point.map(|p| p.0),
            tolerance: e.tolerance,
            note: e.note.clone(),
        }
    }
}

#[pymethods]
impl PyEntry {
    fn __repr__(&self) -> String {
        format!("Entry({:?}, {:?}, residual={:?})", self.name, self.status, self.residual)
    }
}

#[pyclass(name = "Report", module = "sheafgauge", frozen)]
pub struct PyReport(Report);

#[pymethods]
impl PyReport {
    #[getter]
    fn scenario(&self) -> &str {
        &self.0.scenario
    }

    #[getter]
    fn passed(&self) -> bool {
        self.0.passed()
    }

    #[getter]
    fn failures(&self) -> usize {
        self.0.failures()
    }

    #[getter]
    fn entries(&self) -> Vec<PyEntry> {
        self.0.entries.iter().map(PyEntry::from).collect()
    }

    fn get(&self, name: &str) -> Option<PyEntry> {
        self.0.get(name).map(PyEntry::from)
    }

    fn table(&self) -> String {
        self.0.table()
    }

    fn to_key_values(&self) -> String {
        self.0.to_key_values()
    }

    fn __len__(&self) -> usize {
        self.0.entries.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report({:?}, {} checks, {} failed)",
            self.0.scenario,
            self.0.entries.len(),
            self.0.failures()
        )
    }
}

#[pyfunction]
fn list_demos() -> Vec<&'static str> {
    frontend::demo_names().collect()
}

#[pyfunction]
fn parse_expr(src: &str) -> PyResult<PyExpr> {
    PyExpr::new(src)
}

/// Value and derivative of `src` at `t`.
#[pyfunction]
fn eval_expr(src: &str, t: f64) -> PyResult<(f64, f64)> {
    let j = PyExpr::new(src)?.eval(t)?;
    Ok((j.0.value, j.0.grad[0]))
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJet>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyEntry>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(list_demos, m)?)?;
    m.add_function(wrap_pyfunction!(parse_expr, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "sheafgauge")]
fn sheafgauge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
