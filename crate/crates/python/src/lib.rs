//! Python bindings. Tensors cross the boundary as `(dims, flat row-major data)`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tensense::bounds::{self, DudleyForm, NuclearVariant};
use tensense::harness::{run_experiment, ExperimentConfig};
use tensense::norms;
use tensense::rpp;
use tensense::sensing::{make_ensemble, Measurements, SensingEnsemble};
use tensense::solvers::{self, SolverConfig, SolverKind};
use tensense::{DenseTensor, Shape};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py_json<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Tensor", module = "tensense_py", skip_from_py_object)]
#[derive(Clone)]
struct PyTensor {
    inner: DenseTensor,
}

#[pymethods]
impl PyTensor {
    #[new]
    fn new(dims: Vec<usize>, data: Vec<f64>) -> PyResult<Self> {
        let shape = Shape::new(dims).map_err(err)?;
        Ok(Self { inner: DenseTensor::from_vec(shape, data).map_err(err)? })
    }

    #[staticmethod]
    fn gaussian(dims: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: tensense::gaussian_tensor(Shape::new(dims).map_err(err)?, seed) })
    }

    #[staticmethod]
    fn random_tucker(dims: Vec<usize>, ranks: Vec<usize>, seed: u64) -> PyResult<Self> {
        let shape = Shape::new(dims).map_err(err)?;
        Ok(Self { inner: tensense::random_tucker(&shape, &ranks, seed).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: tensense::tensor::io::load(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        tensense::tensor::io::save_text(&self.inner, path).map_err(err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn frobenius(&self) -> f64 {
        self.inner.frobenius()
    }

    fn matricize(&self, mode: usize) -> PyResult<Vec<Vec<f64>>> {
        let m = tensense::matricize(&self.inner, mode).map_err(err)?.matrix;
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn mode_spectrum(&self, mode: usize) -> PyResult<Vec<f64>> {
        tensense::mode_spectrum(&self.inner, mode).map_err(err)
    }

    fn sigma(&self) -> Vec<f64> {
        tensense::sigma_map(&self.inner).entries
    }

    /// Mode spectra plus HOSVD property residuals.
    fn hosvd<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let h = tensense::hosvd(&self.inner);
        let d = PyDict::new(py);
        d.set_item("core", PyTensor { inner: h.core.clone() })?;
        d.set_item("mode_spectra", h.mode_spectra.clone())?;
        let factors: Vec<Vec<Vec<f64>>> =
            h.factors.iter().map(|u| u.row_iter().map(|r| r.iter().copied().collect()).collect()).collect();
        d.set_item("factors", factors)?;
        d.set_item("residuals", to_py_json(py, &h.residuals(&self.inner))?)?;
        Ok(d)
    }

    #[pyo3(signature = (restarts = norms::DEFAULT_RESTARTS, tol = norms::DEFAULT_TOL))]
    fn operator_norm(&self, restarts: usize, tol: f64) -> f64 {
        norms::operator_norm(&self.inner, restarts, tol)
    }

    fn nuclear_avg(&self) -> f64 {
        norms::nuclear_avg(&self.inner)
    }

    #[pyo3(signature = (effort = 8))]
    fn nuclear_bracket<'py>(&self, py: Python<'py>, effort: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, &norms::nuclear_bracket(&self.inner, effort))
    }

    fn __repr__(&self) -> String {
        format!("Tensor(dims={:?})", self.inner.dims())
    }
}

#[pyclass(name = "Ensemble", module = "tensense_py")]
struct PyEnsemble {
    inner: SensingEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    fn new(dims: Vec<usize>, m: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: make_ensemble(&Shape::new(dims).map_err(err)?, m, seed).map_err(err)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn forward(&self, x: &PyTensor) -> PyResult<Vec<f64>> {
        Ok(self.inner.forward(&x.inner).map_err(err)?.values)
    }

    fn adjoint(&self, c: Vec<f64>) -> PyResult<PyTensor> {
        Ok(PyTensor { inner: self.inner.adjoint(&c).map_err(err)? })
    }

    /// Returns `(estimate, diagnostics)`.
    #[pyo3(signature = (y, solver = "sumnuc", alpha = None, max_iters = None))]
    fn recover<'py>(
        &self,
        py: Python<'py>,
        y: Vec<f64>,
        solver: &str,
        alpha: Option<f64>,
        max_iters: Option<usize>,
    ) -> PyResult<(PyTensor, Bound<'py, PyAny>)> {
        let kind: SolverKind = solver.parse().map_err(err)?;
        let mut cfg = SolverConfig { alpha, ..Default::default() };
        if let Some(n) = max_iters {
            cfg.max_iters = n;
        }
        let r = solvers::recover(&self.inner, &Measurements { values: y }, &kind, &cfg).map_err(err)?;
        let diag = to_py_json(py, &r.diagnostics())?;
        Ok((PyTensor { inner: r.estimate }, diag))
    }
}

#[pyfunction]
fn omega_star(g: Vec<f64>, alpha: f64) -> f64 {
    rpp::omega_star(&g, alpha)
}

/// `ω**_α(s)`, `inf` outside the α-ball.
#[pyfunction]
#[pyo3(signature = (s, alpha, tol = rpp::DEFAULT_VALUE_TOL))]
fn omega_biconj(s: Vec<f64>, alpha: f64, tol: f64) -> PyResult<f64> {
    Ok(rpp::omega_biconj(&s, alpha, tol).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (v, alpha, tau, tol = rpp::DEFAULT_PROX_TOL))]
fn prox_omega_biconj(v: Vec<f64>, alpha: f64, tau: f64, tol: f64) -> PyResult<Vec<f64>> {
    rpp::prox_omega_biconj(&v, alpha, tau, tol).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (dims, m, nuc, variant = "proof"))]
fn bound_nuclear<'py>(py: Python<'py>, dims: Vec<usize>, m: usize, nuc: f64, variant: &str) -> PyResult<Bound<'py, PyAny>> {
    let v: NuclearVariant = variant.parse().map_err(err)?;
    to_py_json(py, &bounds::bound_nuclear(&dims, m, nuc, v).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (n, order, n_star, alpha, form = "summed", r_param = None))]
fn bound_rpp_dual<'py>(
    py: Python<'py>,
    n: usize,
    order: usize,
    n_star: usize,
    alpha: f64,
    form: &str,
    r_param: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let f: DudleyForm = form.parse().map_err(err)?;
    to_py_json(py, &bounds::bound_rpp_dual(n, order, n_star, alpha, f, r_param).map_err(err)?)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (n, order, n_star, alpha, m, omega, form = "summed", r_param = None))]
fn bound_rpp_recovery<'py>(
    py: Python<'py>,
    n: usize,
    order: usize,
    n_star: usize,
    alpha: f64,
    m: usize,
    omega: f64,
    form: &str,
    r_param: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let f: DudleyForm = form.parse().map_err(err)?;
    to_py_json(py, &bounds::bound_rpp_recovery(n, order, n_star, alpha, m, r_param, f, omega).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (alpha, epsilon, r, dims, partition = None))]
fn covering_bound<'py>(
    py: Python<'py>,
    alpha: f64,
    epsilon: f64,
    r: usize,
    dims: Vec<usize>,
    partition: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = bounds::CoveringSpec { alpha, epsilon, r, dims, partition };
    to_py_json(py, &bounds::covering_bound(&spec).map_err(err)?)
}

/// Runs a sweep from a JSON config string; returns the rows as dicts.
#[pyfunction]
fn experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json).map_err(err)?;
    let rows = py.detach(|| run_experiment(&cfg)).map_err(err)?;
    to_py_json(py, &rows)
}

#[pymodule]
fn tensense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(omega_star, m)?)?;
    m.add_function(wrap_pyfunction!(omega_biconj, m)?)?;
    m.add_function(wrap_pyfunction!(prox_omega_biconj, m)?)?;
    m.add_function(wrap_pyfunction!(bound_nuclear, m)?)?;
    m.add_function(wrap_pyfunction!(bound_rpp_dual, m)?)?;
    m.add_function(wrap_pyfunction!(bound_rpp_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(covering_bound, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    Ok(())
}
