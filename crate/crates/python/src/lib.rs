//! Python bindings.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use conc_core::constants::{self, EstimateOptions};
use conc_core::continuum::{self, DensitySpec, Family};
use conc_core::report::to_json_string;
use conc_core::scenario::{self, ScenarioParams};
use conc_core::space::{self as sp, ProbabilityVector, SubsetMask};
use conc_core::spectral::{self, AdjacencyRule};
use conc_core::{lipschitz, orlicz, transport, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownScenario(_) => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn mask_from(space: &sp::FiniteMetricProbabilitySpace, mask: Vec<bool>) -> PyResult<SubsetMask> {
    if mask.len() != space.len() {
        return Err(PyValueError::new_err(format!("mask has {} entries, space has {} points", mask.len(), space.len())));
    }
    Ok(SubsetMask::new(mask))
}

/// A finite metric probability space.
#[pyclass(name = "Space", module = "conc")]
#[derive(Clone)]
struct Space {
    inner: sp::FiniteMetricProbabilitySpace,
}

#[pymethods]
impl Space {
    #[new]
    fn new(labels: Vec<String>, distance: Vec<Vec<f64>>, weights: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: sp::FiniteMetricProbabilitySpace::new(labels, distance, weights).map_err(py_err)? })
    }

    #[staticmethod]
    fn hypercube(n: u32) -> PyResult<Self> {
        Ok(Self { inner: sp::build_hypercube(n).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: sp::FiniteMetricProbabilitySpace::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Space(points={}, diameter={})", self.inner.len(), self.inner.diameter())
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<f64> {
        let k = self.inner.len();
        if i >= k || j >= k {
            return Err(PyValueError::new_err(format!("index out of range for {k} points")));
        }
        Ok(self.inner.distance(i, j))
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// Returns `(restricted space, mass, original indices)`.
    fn restrict(&self, mask: Vec<bool>) -> PyResult<(Space, f64, Vec<usize>)> {
        let r = self.inner.restrict(&mask_from(&self.inner, mask)?).map_err(py_err)?;
        Ok((Space { inner: r.space }, r.mass, r.indices))
    }

    fn lip_seminorm(&self, values: Vec<f64>) -> PyResult<f64> {
        if values.len() != self.inner.len() {
            return Err(PyValueError::new_err("field length differs from the number of points"));
        }
        Ok(lipschitz::lip_seminorm(&values, &self.inner))
    }

    fn kirszbraun_extend(&self, values_on_a: Vec<f64>, mask: Vec<bool>) -> PyResult<Vec<f64>> {
        let mask = mask_from(&self.inner, mask)?;
        Ok(lipschitz::kirszbraun_extend(&values_on_a, &self.inner, &mask).map_err(py_err)?.into_vec())
    }

    /// `(lower, upper)` for the subgaussian constant.
    #[pyo3(signature = (route = "lipschitz", restarts = None, seed = 0))]
    fn sigma(&self, route: &str, restarts: Option<usize>, seed: u64) -> PyResult<(f64, f64)> {
        let est = match route {
            "lipschitz" => {
                let mut o = EstimateOptions { seed, ..EstimateOptions::default() };
                o.restarts = restarts.unwrap_or(o.restarts);
                constants::sigma_estimate_lipschitz(&self.inner, &o)
            }
            "transport" => {
                let mut o = transport::TransportOptions { seed, ..Default::default() };
                o.restarts = restarts.unwrap_or(o.restarts);
                transport::sigma_transport(&self.inner, &o)
            }
            other => return Err(PyValueError::new_err(format!("unknown route '{other}'"))),
        }
        .map_err(py_err)?;
        Ok((est.lower, est.upper))
    }

    /// `(lower, upper)` for the spread constant.
    #[pyo3(signature = (restarts = None, seed = 0))]
    fn spread(&self, restarts: Option<usize>, seed: u64) -> PyResult<(f64, f64)> {
        let mut o = EstimateOptions { seed, ..EstimateOptions::default() };
        o.restarts = restarts.unwrap_or(o.restarts);
        let est = constants::spread_estimate(&self.inner, &o, None).map_err(py_err)?;
        Ok((est.lower, est.upper))
    }

    /// Spectral gap of the unit-distance graph form.
    fn lambda1(&self) -> PyResult<f64> {
        let form = spectral::build_graph_form(&self.inner, &AdjacencyRule::UnitDistance).map_err(py_err)?;
        Ok(spectral::lambda1(&form).map_err(py_err)?.lambda1)
    }

    /// `(value, optimal plan as rows)`.
    fn w1(&self, nu1: Vec<f64>, nu2: Vec<f64>) -> PyResult<(f64, Vec<Vec<f64>>)> {
        let a = ProbabilityVector::new(nu1).map_err(py_err)?;
        let b = ProbabilityVector::new(nu2).map_err(py_err)?;
        let plan = transport::w1(&self.inner, &a, &b).map_err(py_err)?;
        let rows = plan.plan.chunks(plan.k).map(<[f64]>::to_vec).collect();
        Ok((plan.value, rows))
    }
}

#[pyfunction]
#[pyo3(signature = (values, weights, alpha = 2.0))]
fn psi_norm(values: Vec<f64>, weights: Vec<f64>, alpha: f64) -> PyResult<f64> {
    if values.len() != weights.len() || !(alpha >= 1.0) {
        return Err(PyValueError::new_err("need equal lengths and alpha >= 1"));
    }
    Ok(orlicz::psi_norm(&values, &weights, alpha))
}

#[pyfunction]
fn lp_norm(values: Vec<f64>, weights: Vec<f64>, p: f64) -> PyResult<f64> {
    if values.len() != weights.len() || !(p >= 1.0) {
        return Err(PyValueError::new_err("need equal lengths and p >= 1"));
    }
    Ok(orlicz::lp_norm(&values, &weights, p))
}

#[pyfunction]
fn sigma_f(values: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    if values.len() != weights.len() {
        return Err(PyValueError::new_err("need equal lengths"));
    }
    Ok(constants::sigma_f(&values, &weights))
}

#[pyfunction]
fn kl_divergence(nu: Vec<f64>, mu: Vec<f64>) -> PyResult<f64> {
    transport::kl_divergence(&nu, &mu).map_err(py_err)
}

/// `(mass, mean, second_moment, variance)` of a density restricted to `|x| ≥ r`.
#[pyfunction]
fn quad_restricted_moments(family: &str, r: f64) -> PyResult<(f64, f64, f64, f64)> {
    let family: Family = family.parse().map_err(py_err)?;
    let m = continuum::quad_restricted_moments(&DensitySpec::new(family, 1).map_err(py_err)?, r).map_err(py_err)?;
    Ok((m.mass, m.mean, m.second_moment, m.variance))
}

/// Runs a scenario and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (name, seed = 0, n = None, r = None, samples = None, constant = None, restarts = None))]
fn run_scenario(
    name: &str,
    seed: u64,
    n: Option<u32>,
    r: Option<f64>,
    samples: Option<usize>,
    constant: Option<f64>,
    restarts: Option<usize>,
) -> PyResult<String> {
    let params = ScenarioParams { n, r, samples, constant, restarts, jobs: None, timing: false };
    let report = scenario::run_scenario(name, &params, seed).map_err(py_err)?;
    to_json_string(&report).map_err(py_err)
}

#[pymodule]
fn conc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_function(wrap_pyfunction!(psi_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_f, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(quad_restricted_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("SCENARIOS", scenario::SCENARIOS.to_vec())?;
    m.add("RESTRICTION_SUBGAUSSIAN_CONSTANT", constants::RESTRICTION_SUBGAUSSIAN_CONSTANT)?;
    Ok(())
}
