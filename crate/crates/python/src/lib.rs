use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ppvt_core::analysis;
use ppvt_core::geometry::{Point2, Window};
use ppvt_core::identities::{self, FieldSet, Identity, IdentityConfig};
use ppvt_core::mc;
use ppvt_core::netsim::{self, NetworkScenario, TxSnr};
use ppvt_core::quadrature::QuadratureSpec;
use ppvt_core::{ppp, voronoi};

fn to_py(e: ppvt_core::Error) -> PyErr {
    match e {
        ppvt_core::Error::Validation { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn points(v: &[(f64, f64)]) -> Vec<Point2> {
    v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}

/// Mean, standard error and replication count of a Monte Carlo run.
#[pyclass(name = "Estimate", frozen)]
struct PyEstimate {
    inner: mc::Estimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean
    }

    #[getter]
    fn stderr(&self) -> f64 {
        self.inner.stderr
    }

    #[getter]
    fn n_replications(&self) -> usize {
        self.inner.n_replications
    }

    #[getter]
    fn confidence_level(&self) -> f64 {
        self.inner.confidence_level
    }

    fn interval(&self) -> (f64, f64) {
        self.inner.interval()
    }

    /// `|mean - target| <= k * stderr`.
    #[pyo3(signature = (target, k = 3.0))]
    fn within(&self, target: f64, k: f64) -> bool {
        self.inner.within(target, k)
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(mean={}, stderr={}, n_replications={})",
            self.inner.mean, self.inner.stderr, self.inner.n_replications
        )
    }
}

impl From<mc::Estimate> for PyEstimate {
    fn from(inner: mc::Estimate) -> Self {
        PyEstimate { inner }
    }
}

/// Network parameters. `gamma_tx=None` means interference-limited.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: NetworkScenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (lambda_b = 1.0, lambda_u = 10.0, path_loss_exp = 4.0, rate = 1e4, gamma = 1.0, gamma_tx = None, window_radius_factor = 8.0))]
    fn new(
        lambda_b: f64,
        lambda_u: f64,
        path_loss_exp: f64,
        rate: f64,
        gamma: f64,
        gamma_tx: Option<f64>,
        window_radius_factor: f64,
    ) -> PyResult<Self> {
        let inner = NetworkScenario {
            lambda_b,
            lambda_u,
            path_loss_exp,
            rate,
            gamma,
            tx_snr: gamma_tx.map_or(TxSnr::Infinite, TxSnr::from_linear),
            window_radius_factor,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    #[getter]
    fn lambda_b(&self) -> f64 {
        self.inner.lambda_b
    }

    #[getter]
    fn lambda_u(&self) -> f64 {
        self.inner.lambda_u
    }

    #[getter]
    fn path_loss_exp(&self) -> f64 {
        self.inner.path_loss_exp
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn gamma_tx(&self) -> Option<f64> {
        match self.inner.tx_snr {
            TxSnr::Infinite => None,
            TxSnr::Finite(g) => Some(g),
        }
    }

    #[getter]
    fn window_radius_factor(&self) -> f64 {
        self.inner.window_radius_factor
    }

    fn with_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(gamma);
        inner.validate().map_err(to_py)?;
        Ok(PyScenario { inner })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.inner)
    }
}

/// PPP on the origin-centered disk of the given radius, as `(x, y)` tuples.
#[pyfunction]
fn sample_ppp(intensity: f64, window_radius: f64, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let w = Window::centered_disk(window_radius).map_err(to_py)?;
    let s = ppp::sample_ppp(intensity, w, seed).map_err(to_py)?;
    Ok(s.points.iter().map(|p| (p.x, p.y)).collect())
}

#[pyfunction]
fn is_in_cell_direct(x: (f64, f64), sites: Vec<(f64, f64)>, idx0: usize) -> PyResult<bool> {
    voronoi::is_in_cell_direct(Point2::new(x.0, x.1), &points(&sites), idx0).map_err(to_py)
}

#[pyfunction]
fn is_in_cell_product(x: (f64, f64), sites: Vec<(f64, f64)>, idx0: usize) -> PyResult<bool> {
    voronoi::is_in_cell_product(Point2::new(x.0, x.1), &points(&sites), idx0).map_err(to_py)
}

/// Returns `(checked, ties, mismatches)`.
#[pyfunction]
fn check_membership_equivalence(n_instances: usize, seed: u64) -> (usize, usize, usize) {
    let r = voronoi::check_membership_equivalence(n_instances, seed);
    (r.checked, r.ties, r.mismatches)
}

#[pyfunction]
fn t_function(x: f64) -> PyResult<f64> {
    analysis::t_function(x).map_err(to_py)
}

#[pyfunction]
fn eta(w: f64, rate: f64) -> PyResult<f64> {
    analysis::eta(w, rate).map_err(to_py)
}

#[pyfunction]
fn w_threshold(rate: f64, gamma: f64) -> PyResult<f64> {
    analysis::w_threshold(rate, gamma).map_err(to_py)
}

#[pyfunction]
fn coverage_closed_form(gamma: f64) -> PyResult<f64> {
    analysis::coverage_closed_form(gamma).map_err(to_py)
}

#[pyfunction]
fn w_closed_form(scenario: &PyScenario) -> PyResult<f64> {
    analysis::w_closed_form(&scenario.inner, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
fn w_approx(scenario: &PyScenario) -> PyResult<f64> {
    analysis::w_approx(&scenario.inner, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
fn w_served_count(scenario: &PyScenario) -> PyResult<f64> {
    analysis::w_served_count(&scenario.inner, &QuadratureSpec::default()).map_err(to_py)
}

#[pyfunction]
fn estimate_w_mc(py: Python<'_>, scenario: &PyScenario, n_rep: usize, seed: u64) -> PyResult<PyEstimate> {
    let s = scenario.inner;
    py.detach(|| netsim::estimate_w_mc(&s, n_rep, seed))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn estimate_coverage_mc(py: Python<'_>, scenario: &PyScenario, n_rep: usize, seed: u64) -> PyResult<PyEstimate> {
    let s = scenario.inner;
    py.detach(|| netsim::estimate_coverage_mc(&s, n_rep, seed))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn estimate_mean_ues(py: Python<'_>, scenario: &PyScenario, n_rep: usize, seed: u64) -> PyResult<PyEstimate> {
    let s = scenario.inner;
    py.detach(|| netsim::estimate_mean_ues(&s, n_rep, seed))
        .map(Into::into)
        .map_err(to_py)
}

/// One closed-form versus Monte Carlo check on a built-in field suite.
#[pyfunction]
#[pyo3(signature = (identity, field_set, n_rep, seed, lambda_u = 10.0, lambda_b = 1.0))]
fn verify_identity<'py>(
    py: Python<'py>,
    identity: &str,
    field_set: &str,
    n_rep: usize,
    seed: u64,
    lambda_u: f64,
    lambda_b: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let id = Identity::parse(identity).map_err(to_py)?;
    let fs = FieldSet::parse(field_set).map_err(to_py)?;
    let cfg = IdentityConfig {
        lambda1: lambda_u,
        lambda2: lambda_b,
        ..IdentityConfig::default()
    };
    let c = py
        .detach(|| identities::verify_identity(id, fs, &cfg, n_rep, seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("identity", id.name())?;
    d.set_item("field_set", fs.name())?;
    d.set_item("closed_form", c.closed_form)?;
    d.set_item("mc_mean", c.estimate.mean)?;
    d.set_item("mc_stderr", c.estimate.stderr)?;
    d.set_item("n_rep", c.estimate.n_replications)?;
    d.set_item("pass", c.pass())?;
    Ok(d)
}

#[pymodule]
fn ppvt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(sample_ppp, m)?)?;
    m.add_function(wrap_pyfunction!(is_in_cell_direct, m)?)?;
    m.add_function(wrap_pyfunction!(is_in_cell_product, m)?)?;
    m.add_function(wrap_pyfunction!(check_membership_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(t_function, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(w_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(w_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(w_approx, m)?)?;
    m.add_function(wrap_pyfunction!(w_served_count, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_w_mc, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_coverage_mc, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mean_ues, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identity, m)?)?;
    Ok(())
}
