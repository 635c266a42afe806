//! Python bindings: the built-in problems, characteristic tracing, fields,
//! and the run/convergence/verify drivers, as a `sldg_py` extension
//! module.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sldg::config::RunConfig;
use sldg::error::SldgError;
use sldg::mesh::Mesh2D;
use sldg::problems;
use sldg::runner;
use sldg::velocity::{TracerConfig, TracerOrder};
use sldg::ModalField2D;

fn to_py_err(e: SldgError) -> PyErr {
    match e {
        SldgError::InvalidArgument(_) | SldgError::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn tracer(order: u32, substeps: u32) -> PyResult<TracerConfig> {
    let order = match order {
        2 => TracerOrder::Rk2,
        4 => TracerOrder::Rk4,
        other => return Err(PyValueError::new_err(format!("tracer order must be 2 or 4, got {other}"))),
    };
    TracerConfig::new(order, substeps).map_err(to_py_err)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[pyfunction]
fn gauss_legendre(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let rule = sldg::gauss_legendre(n).map_err(to_py_err)?;
    Ok((rule.nodes, rule.weights))
}

/// Names of the built-in problems.
#[pyfunction]
fn problem_names() -> Vec<String> {
    problems::registry().iter().map(|p| p.name.to_string()).collect()
}

/// A built-in transport problem.
#[pyclass]
struct Problem {
    spec: problems::ProblemSpec,
}

#[pymethods]
impl Problem {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { spec: problems::by_name(name).map_err(to_py_err)? })
    }

    #[getter]
    fn name(&self) -> &str {
        self.spec.name
    }

    #[getter]
    fn domain(&self) -> (f64, f64, f64, f64) {
        self.spec.domain
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (self.spec.velocity.a(x, y, t), self.spec.velocity.b(x, y, t))
    }

    fn initial(&self, x: f64, y: f64) -> f64 {
        (self.spec.initial)(x, y)
    }

    /// Exact solution at (x, y, t), or None when it is only known at the
    /// recurrence horizon.
    fn exact(&self, x: f64, y: f64, t: f64) -> Option<f64> {
        self.spec.exact_at(x, y, t)
    }

    /// Trace the characteristic through (x, y) from t_from to t_to.
    #[pyo3(signature = (x, y, t_from, t_to, order=4, substeps=64))]
    fn trace(&self, x: f64, y: f64, t_from: f64, t_to: f64, order: u32, substeps: u32) -> PyResult<(f64, f64)> {
        let cfg = tracer(order, substeps)?;
        sldg::velocity::trace_2d(&self.spec.velocity, (x, y), t_from, t_to, &cfg).map_err(to_py_err)
    }
}

/// A modal DG field, exposed for projection and point evaluation.
#[pyclass]
struct Field2D {
    inner: ModalField2D,
}

#[pymethods]
impl Field2D {
    /// L²-project a Python callable on an nx x ny mesh over the rectangle.
    #[staticmethod]
    #[pyo3(signature = (f, nx, ny, degree, ax, bx, ay, by, quad_points=None))]
    #[allow(clippy::too_many_arguments)]
    fn project(
        py: Python<'_>,
        f: PyObject,
        nx: usize,
        ny: usize,
        degree: usize,
        ax: f64,
        bx: f64,
        ay: f64,
        by: f64,
        quad_points: Option<usize>,
    ) -> PyResult<Self> {
        let mesh = Mesh2D::rect(ax, bx, nx, ay, by, ny).map_err(to_py_err)?;
        let q = quad_points.unwrap_or(degree + 2);
        let mut failure: Option<PyErr> = None;
        let inner = ModalField2D::project(mesh, degree, degree, q, |x, y| {
            if failure.is_some() {
                return 0.0;
            }
            match f.call1(py, (x, y)).and_then(|v| v.extract::<f64>(py)) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        })
        .map_err(to_py_err)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Self { inner })
    }

    fn evaluate(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.evaluate(x, y).map_err(to_py_err)
    }

    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    /// The field snapshot in the plain-text `r s i j beta` format.
    fn dump(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.dump(&mut buf).map_err(to_py_err)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &runner::RunMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("mesh", &m.mesh_label)?;
    d.set_item("l1", m.l1)?;
    d.set_item("l2", m.l2)?;
    d.set_item("linf", m.linf)?;
    d.set_item("mass_drift", m.mass_drift)?;
    d.set_item("stability_ratio", m.stability_ratio)?;
    d.set_item("wall_s", m.wall_s)?;
    d.set_item("dt", m.dt)?;
    d.set_item("steps", m.steps)?;
    Ok(d)
}

/// Solve the configured problem once; returns the metrics and the final
/// field.
#[pyfunction]
#[pyo3(signature = (config_json, threads=1))]
fn run(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<(Py<PyDict>, Py<Field2D>)> {
    let rc = RunConfig::from_json(config_json)
        .and_then(|c| c.resolve(threads.max(1)))
        .map_err(to_py_err)?;
    let (metrics, art) = runner::run_metrics(&rc, rc.nx, rc.ny).map_err(to_py_err)?;
    let d = metrics_dict(py, &metrics)?;
    let field = Py::new(py, Field2D { inner: art.field })?;
    Ok((d.unbind(), field))
}

/// Convergence study over the configured mesh list; returns one metrics
/// dict per mesh with order entries filled in.
#[pyfunction]
#[pyo3(signature = (config_json, threads=1))]
fn convergence(py: Python<'_>, config_json: &str, threads: usize) -> PyResult<Vec<Py<PyDict>>> {
    let rc = RunConfig::from_json(config_json)
        .and_then(|c| c.resolve(threads.max(1)))
        .map_err(to_py_err)?;
    let rows = runner::convergence_study(&rc).map_err(to_py_err)?;
    let l2o = runner::convergence_orders(&rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let d = metrics_dict(py, r)?;
        d.set_item("l2_order", l2o[i])?;
        out.push(d.unbind());
    }
    Ok(out)
}

/// Run the verification checks; returns (check, value, bound, pass) rows.
#[pyfunction]
#[pyo3(signature = (config_json, threads=1))]
fn verify(config_json: &str, threads: usize) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let rc = RunConfig::from_json(config_json)
        .and_then(|c| c.resolve(threads.max(1)))
        .map_err(to_py_err)?;
    let rows = runner::verify_problem(&rc, false).map_err(to_py_err)?;
    Ok(rows.into_iter().map(|r| (r.check, r.value, r.bound, r.pass)).collect())
}

#[pymodule]
fn sldg_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(problem_names, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_class::<Problem>()?;
    m.add_class::<Field2D>()?;
    Ok(())
}
