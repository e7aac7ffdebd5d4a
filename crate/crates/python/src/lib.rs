//! Python bindings. Results are returned as plain dicts and lists.

use damctl_core::analytics::{self, CostModel, Precision};
use damctl_core::control::{self, AsymptoticProblem, ExactProblem};
use damctl_core::simulator::{self, SimulationConfig};
use damctl_core::verify::{verify_sweep, VerifyConfig, VerifyRegime};
use damctl_core::DamError;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pythonize::pythonize;
use serde::Serialize;

fn err(e: DamError) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyArithmeticError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, value)?)
}

fn precision(digits: Option<u32>) -> PyResult<Precision> {
    digits.map_or(Ok(Precision::Double), |d| Precision::extended(d).map_err(err))
}

/// A service-time law, built from the command-line syntax, e.g. "exp:1.25".
#[pyclass(name = "ServiceDistribution", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution(damctl_core::ServiceDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(Self).map_err(err)
    }

    #[staticmethod]
    fn exponential(rate: f64) -> PyResult<Self> {
        damctl_core::ServiceDistribution::exponential(rate).map(Self).map_err(err)
    }

    #[staticmethod]
    fn erlang(shape: u32, rate: f64) -> PyResult<Self> {
        damctl_core::ServiceDistribution::erlang(shape, rate).map(Self).map_err(err)
    }

    #[staticmethod]
    fn gamma(shape: f64, rate: f64) -> PyResult<Self> {
        damctl_core::ServiceDistribution::gamma(shape, rate).map(Self).map_err(err)
    }

    #[staticmethod]
    fn deterministic(duration: f64) -> PyResult<Self> {
        damctl_core::ServiceDistribution::deterministic(duration).map(Self).map_err(err)
    }

    #[staticmethod]
    fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> PyResult<Self> {
        damctl_core::ServiceDistribution::hyper_exponential(weights, rates).map(Self).map_err(err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn raw_moment(&self, k: u32) -> PyResult<f64> {
        self.0.raw_moment(k).map_err(err)
    }

    /// Laplace-Stieltjes transform at `s >= 0`.
    fn lst(&self, s: f64) -> PyResult<f64> {
        self.0.lst(s).map_err(err)
    }

    /// Probabilities of 0..=n arrivals during one service.
    fn weights(&self, lam: f64, n: usize) -> PyResult<Vec<f64>> {
        self.0.mixed_poisson_weights(lam, n).map_err(err)
    }

    fn scale_to_mean(&self, mean: f64) -> PyResult<Self> {
        self.0.scale_to_mean(mean).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ServiceDistribution('{}')", self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[derive(Serialize)]
struct Analysis {
    log10_q_level: f64,
    metrics: analytics::BusyPeriodMetrics,
    stationary: analytics::StationaryMetrics,
}

/// Threshold model: arrival rate, the two service laws and the level.
#[pyclass(name = "DamModel", frozen, from_py_object)]
#[derive(Clone)]
struct PyModel(damctl_core::DamModel);

#[pymethods]
impl PyModel {
    #[new]
    fn new(lam: f64, b1: PyDistribution, b2: PyDistribution, level: usize) -> PyResult<Self> {
        damctl_core::DamModel::new(lam, b1.0, b2.0, level).map(Self).map_err(err)
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn level(&self) -> usize {
        self.0.level
    }

    #[getter]
    fn b1(&self) -> PyDistribution {
        PyDistribution(self.0.b1.clone())
    }

    #[getter]
    fn b2(&self) -> PyDistribution {
        PyDistribution(self.0.b2.clone())
    }

    #[getter]
    fn rho1(&self) -> f64 {
        self.0.rho1()
    }

    #[getter]
    fn rho2(&self) -> f64 {
        self.0.rho2()
    }

    /// `Q_0..=Q_L`; entries beyond the `f64` range are infinite.
    fn busy_period_counts(&self) -> PyResult<Vec<f64>> {
        analytics::busy_period_counts(&self.0).map(|q| q.to_vec()).map_err(err)
    }

    /// `(p1, p2)`.
    fn stationary_probs(&self) -> PyResult<(f64, f64)> {
        analytics::stationary_probs(&self.0).map_err(err)
    }

    /// Busy-period metrics, stationary probabilities and cost.
    #[pyo3(signature = (j1 = 0.0, j2 = 0.0, precision = None))]
    fn analyze<'py>(&self, py: Python<'py>, j1: f64, j2: f64, precision: Option<u32>) -> PyResult<Bound<'py, PyAny>> {
        let costs = CostModel::new(j1, j2).map_err(err)?;
        let a = analytics::analyze(&self.0, &costs, self::precision(precision)?).map_err(err)?;
        let out = Analysis { log10_q_level: a.q_level.ln() / std::f64::consts::LN_10, metrics: a.metrics, stationary: a.stationary };
        to_py(py, &out)
    }

    fn __repr__(&self) -> String {
        let m = &self.0;
        format!("DamModel(lam={}, b1='{}', b2='{}', level={})", m.lambda, m.b1, m.b2, m.level)
    }
}

/// Large-level optimal control for the given costs.
#[pyfunction]
#[pyo3(signature = (lam, rho2, rho12, level, j1, j2, c_max = None))]
#[allow(clippy::too_many_arguments)]
fn optimize_asymptotic<'py>(
    py: Python<'py>,
    lam: f64,
    rho2: f64,
    rho12: f64,
    level: usize,
    j1: f64,
    j2: f64,
    c_max: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut problem = AsymptoticProblem::new(lam, rho2, rho12, level, CostModel::new(j1, j2).map_err(err)?);
    problem.c_max = c_max;
    to_py(py, &control::optimize_asymptotic(&problem).map_err(err)?)
}

/// Finite-level control: minimizes the exact cost over the mean of `b1`.
#[pyfunction]
#[pyo3(signature = (lam, b1, b2, level, j1, j2, rho1_min = 0.5, rho1_max = 1.5, precision = None))]
#[allow(clippy::too_many_arguments)]
fn optimize_exact<'py>(
    py: Python<'py>,
    lam: f64,
    b1: PyDistribution,
    b2: PyDistribution,
    level: usize,
    j1: f64,
    j2: f64,
    rho1_min: f64,
    rho1_max: f64,
    precision: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut problem = ExactProblem::new(lam, b1.0, b2.0, level, CostModel::new(j1, j2).map_err(err)?);
    problem.rho1_range = (rho1_min, rho1_max);
    problem.precision = self::precision(precision)?;
    to_py(py, &control::optimize_exact(&problem).map_err(err)?)
}

/// Regenerative simulation with batch-means confidence intervals.
#[pyfunction]
#[pyo3(signature = (model, cycles = 100_000, seed = 1, batches = simulator::DEFAULT_BATCH_COUNT))]
fn simulate<'py>(py: Python<'py>, model: PyModel, cycles: u64, seed: u64, batches: usize) -> PyResult<Bound<'py, PyAny>> {
    let config = SimulationConfig { model: model.0, n_cycles: cycles, seed, batch_count: batches };
    let report = py.detach(|| simulator::simulate(&config)).map_err(err)?;
    to_py(py, &report)
}

/// Exact versus large-level approximations over a grid of levels.
#[pyfunction]
#[pyo3(signature = (lam, b1, b2, regime, levels = None, c_values = None, rho1 = None))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    lam: f64,
    b1: PyDistribution,
    b2: PyDistribution,
    regime: &str,
    levels: Option<Vec<usize>>,
    c_values: Option<Vec<f64>>,
    rho1: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let regime: VerifyRegime = regime.parse().map_err(err)?;
    let mut config = VerifyConfig::new(lam, b1.0, b2.0, regime);
    if let Some(levels) = levels {
        config.levels = levels;
    }
    if let Some(cs) = c_values {
        config.c_values = cs;
    }
    config.rho1 = rho1;
    to_py(py, &verify_sweep(&config).map_err(err)?)
}

/// `(C, J_upper, J_lower)` rows over a grid of C values.
#[pyfunction]
fn cost_sweep<'py>(py: Python<'py>, c_values: Vec<f64>, rho12: f64, rho2: f64, j1: f64, j2: f64) -> PyResult<Bound<'py, PyAny>> {
    let costs = CostModel::new(j1, j2).map_err(err)?;
    to_py(py, &control::cost_sweep(&c_values, rho12, rho2, &costs).map_err(err)?)
}

#[pymodule]
fn damctl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(optimize_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_exact, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(cost_sweep, m)?)?;
    Ok(())
}
