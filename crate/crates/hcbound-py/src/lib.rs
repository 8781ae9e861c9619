//! Python bindings for `hcbound`.
//!
//! Structured results (reports, sweeps, transforms) cross the boundary as
//! plain dictionaries decoded from the library's JSON rendering.

use hcbound::bounds::{assemble_bound as assemble, BoundOptions, RiskMode, Target};
use hcbound::conditional_risk::{self as cr, ConditionalPoint, Constraint};
use hcbound::distributions::{DistributionConfig, LabeledDistribution};
use hcbound::experiments::{self, json_string, SweepConfig, DEFAULT_SAMPLES, DEFAULT_SEED};
use hcbound::hypotheses::{HypothesisSpec, LinearHypothesis, Magnitude};
use hcbound::losses::{LossFamily, MarginLoss, TruncationEps};
use hcbound::transforms::{self as tr, MassartParams, PiecewiseTransform};
use hcbound::Error;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::QuadratureNonConvergence { .. } => PyArithmeticError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for hcbound::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = json_string(value).py_err()?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A margin-based surrogate loss.
#[pyclass(name = "Loss", module = "hcbound_py", frozen)]
struct PyLoss(MarginLoss);

#[pymethods]
impl PyLoss {
    #[new]
    #[pyo3(signature = (family, k = 1.0, rho = 1.0))]
    fn new(family: &str, k: f64, rho: f64) -> PyResult<Self> {
        let family: LossFamily = family.parse().py_err()?;
        Ok(PyLoss(MarginLoss::from_family(family, k, rho).py_err()?))
    }

    fn __call__(&self, margin: f64) -> f64 {
        self.0.eval(margin)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    #[getter]
    fn is_convex(&self) -> bool {
        self.0.is_convex()
    }

    fn __repr__(&self) -> String {
        format!("Loss({})", self.0)
    }
}

/// A hypothesis class with an optional perturbation radius.
#[pyclass(name = "HypothesisClass", module = "hcbound_py", frozen)]
struct PyClass(HypothesisSpec);

#[pymethods]
impl PyClass {
    #[staticmethod]
    #[pyo3(signature = (gamma = 0.0))]
    fn all(gamma: f64) -> PyResult<Self> {
        Ok(PyClass(HypothesisSpec::all().with_gamma(gamma).py_err()?))
    }

    /// Linear predictors; `b_bound` may be `math.inf`.
    #[staticmethod]
    #[pyo3(signature = (w_bound, b_bound, gamma = 0.0))]
    fn linear(w_bound: f64, b_bound: f64, gamma: f64) -> PyResult<Self> {
        let b = Magnitude::new(b_bound).py_err()?;
        Ok(PyClass(HypothesisSpec::linear(w_bound, b).and_then(|s| s.with_gamma(gamma)).py_err()?))
    }

    /// One-hidden-layer ReLU networks.
    #[staticmethod]
    #[pyo3(signature = (lambda_bound, w_bound, b_bound, gamma = 0.0))]
    fn relu(lambda_bound: f64, w_bound: f64, b_bound: f64, gamma: f64) -> PyResult<Self> {
        let b = Magnitude::new(b_bound).py_err()?;
        Ok(PyClass(HypothesisSpec::relu(lambda_bound, w_bound, b).and_then(|s| s.with_gamma(gamma)).py_err()?))
    }

    #[getter]
    fn is_adversarial(&self) -> bool {
        self.0.is_adversarial()
    }

    /// Largest attainable score at an input of the given norm.
    fn score_reach(&self, x_norm: f64) -> f64 {
        self.0.score_reach(x_norm).as_f64()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("HypothesisClass({}, gamma={})", self.0.class_name(), self.0.gamma)
    }
}

/// A piecewise transform or its inverse.
#[pyclass(name = "Transform", module = "hcbound_py", frozen)]
struct PyTransform(PiecewiseTransform);

#[pymethods]
impl PyTransform {
    fn __call__(&self, t: f64) -> f64 {
        self.0.eval(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        self.0.derivative(t)
    }

    #[getter]
    fn domain_end(&self) -> f64 {
        self.0.domain_end()
    }

    fn inverse(&self) -> PyResult<PyTransform> {
        Ok(PyTransform(self.0.inverse().py_err()?))
    }

    /// Solves `T(t) = y` by bisection.
    fn solve(&self, y: f64) -> PyResult<f64> {
        self.0.invert_numerically(y).py_err()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.0)
    }
}

/// A labeled distribution on `[-1, 1]`.
#[pyclass(name = "Distribution", module = "hcbound_py", frozen)]
struct PyDistribution(LabeledDistribution);

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn nonadversarial_example(sigma: f64) -> PyResult<Self> {
        Ok(PyDistribution(LabeledDistribution::nonadversarial_example(sigma).py_err()?))
    }

    #[staticmethod]
    #[pyo3(signature = (sigma, gamma = 0.1))]
    fn adversarial_example(sigma: f64, gamma: f64) -> PyResult<Self> {
        Ok(PyDistribution(LabeledDistribution::adversarial_example(sigma, gamma).py_err()?))
    }

    /// Builds from a JSON preset, component list or finite atom list.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDistribution(DistributionConfig::from_json(text).py_err()?))
    }

    /// Conditional probability of the positive label, if defined at `x`.
    fn eta(&self, x: f64) -> Option<f64> {
        self.0.eta(x)
    }

    /// Seeded sample as `(x, y)` pairs with `y` in `{-1, 1}`.
    fn sample(&self, n: usize, seed: u64) -> Vec<(f64, i8)> {
        self.0.sample(n, seed).into_iter().map(|p| (p.x, p.y.sign() as i8)).collect()
    }
}

fn massart(beta: Option<f64>) -> PyResult<Option<MassartParams>> {
    beta.map(MassartParams::new).transpose().py_err()
}

/// Forward transform; a positive `gamma` on the class selects the
/// adversarial variant and `massart_beta` the noise-margin variant.
#[pyfunction]
#[pyo3(signature = (loss, cls, eps = 0.0, massart_beta = None))]
fn transform(loss: &PyLoss, cls: &PyClass, eps: f64, massart_beta: Option<f64>) -> PyResult<PyTransform> {
    let eps = TruncationEps::new(eps).py_err()?;
    let out = match (cls.0.is_adversarial(), massart(massart_beta)?) {
        (true, Some(mp)) => tr::massart_adversarial_transform(&loss.0, &cls.0, mp),
        (true, None) => tr::adversarial_transform(&loss.0, &cls.0, eps),
        (false, Some(mp)) => tr::massart_transform(&loss.0, &cls.0, mp),
        (false, None) => tr::transform(&loss.0, &cls.0, eps),
    };
    Ok(PyTransform(out.py_err()?))
}

/// Inverse transform used in bounds, possibly a relaxation.
#[pyfunction]
fn transform_inverse(loss: &PyLoss, cls: &PyClass) -> PyResult<PyTransform> {
    Ok(PyTransform(tr::transform_inverse(&loss.0, &cls.0).py_err()?))
}

/// Closed-form minimal conditional risk at input norm `x_norm` and
/// conditional probability `eta`.
#[pyfunction]
fn min_conditional_risk(loss: &PyLoss, cls: &PyClass, x_norm: f64, eta: f64) -> PyResult<f64> {
    let point = ConditionalPoint::new(x_norm, eta).py_err()?;
    cr::min_conditional_risk(&loss.0, &cls.0, point).py_err()
}

/// Closed-form minimal adversarial conditional risk as `(lower, upper)`.
#[pyfunction]
fn min_conditional_risk_adversarial(loss: &PyLoss, cls: &PyClass, x_norm: f64, eta: f64) -> PyResult<(f64, f64)> {
    let point = ConditionalPoint::new(x_norm, eta).py_err()?;
    let iv = cr::min_conditional_risk_adversarial(&loss.0, &cls.0, point).py_err()?;
    Ok((iv.lower, iv.upper))
}

/// Grid infimum of the conditional risk over the class.
#[pyfunction]
#[pyo3(signature = (loss, cls, x_norm, eta, grid_n = 4001))]
fn grid_min_conditional_risk(loss: &PyLoss, cls: &PyClass, x_norm: f64, eta: f64, grid_n: usize) -> PyResult<f64> {
    let point = ConditionalPoint::new(x_norm, eta).py_err()?;
    cr::brute_force_inf(&loss.0, &cls.0, point, Constraint::None, grid_n).py_err()
}

/// Assembles the bound for the scalar hypothesis `x -> h_w x + h_b`.
#[pyfunction]
#[pyo3(signature = (
    loss, cls, dist, h_w = -5.0, h_b = 0.0, target = None, massart_beta = None,
    monte_carlo = None, seed = DEFAULT_SEED, gaps = false,
))]
#[allow(clippy::too_many_arguments)]
fn assemble_bound<'py>(
    py: Python<'py>,
    loss: &PyLoss,
    cls: &PyClass,
    dist: &PyDistribution,
    h_w: f64,
    h_b: f64,
    target: Option<&str>,
    massart_beta: Option<f64>,
    monte_carlo: Option<usize>,
    seed: u64,
    gaps: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let target = match target {
        Some("zero-one") => Target::ZeroOne,
        Some("adversarial-zero-one") => Target::AdversarialZeroOne,
        None if cls.0.is_adversarial() => Target::AdversarialZeroOne,
        None => Target::ZeroOne,
        Some(other) => return Err(PyValueError::new_err(format!("unknown target `{other}`"))),
    };
    let mode = match monte_carlo {
        Some(n) => RiskMode::MonteCarlo { n, seed },
        None => RiskMode::Exact,
    };
    let options = BoundOptions { massart: massart(massart_beta)?, mode, compute_gaps: gaps };
    let h = LinearHypothesis::scalar(h_w, h_b);
    let report = py.detach(|| assemble(target, &loss.0, &cls.0, &dist.0, &h, options)).py_err()?;
    to_dict(py, &report)
}

/// Runs the non-adversarial (`adversarial=False`) or adversarial noise sweep.
#[pyfunction]
#[pyo3(signature = (adversarial, n = DEFAULT_SAMPLES, seed = DEFAULT_SEED, sigmas = None))]
fn run_sweep(
    py: Python<'_>,
    adversarial: bool,
    n: usize,
    seed: u64,
    sigmas: Option<Vec<f64>>,
) -> PyResult<Bound<'_, PyAny>> {
    let mut cfg = if adversarial { SweepConfig::adversarial() } else { SweepConfig::nonadversarial() };
    cfg.n_samples = n;
    cfg.seed = seed;
    if let Some(s) = sigmas {
        cfg.sigmas = s;
    }
    let result = py.detach(|| experiments::run_sweep(cfg)).py_err()?;
    to_dict(py, &result)
}

/// Surrogate, transform and inverse curves for every loss family.
#[pyfunction]
#[pyo3(signature = (grid_n = 401))]
fn transform_curves(py: Python<'_>, grid_n: usize) -> PyResult<Bound<'_, PyAny>> {
    let rows = experiments::emit_transform_curves(&experiments::figure_losses(), &experiments::figure_spec(), grid_n)
        .py_err()?;
    to_dict(py, &rows)
}

#[pymodule]
fn hcbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLoss>()?;
    m.add_class::<PyClass>()?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(transform_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(min_conditional_risk, m)?)?;
    m.add_function(wrap_pyfunction!(min_conditional_risk_adversarial, m)?)?;
    m.add_function(wrap_pyfunction!(grid_min_conditional_risk, m)?)?;
    m.add_function(wrap_pyfunction!(assemble_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(transform_curves, m)?)?;
    Ok(())
}
