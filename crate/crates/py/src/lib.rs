//! Python bindings for `pricedisc_core`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use pricedisc_core::adversarial;
use pricedisc_core::dist;
use pricedisc_core::experiment::{self, Engine};
use pricedisc_core::oracle;
use pricedisc_core::pricing;
use pricedisc_core::{Dataset, DistributionSpec, Error, KSchedule, PricingFunction, QuadratureConfig, Strategy};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for pricedisc_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn dataset(points: &[(f64, f64)]) -> PyResult<Dataset> {
    Dataset::from_pairs(points).py_err()
}

fn pricing_function(prices: Vec<f64>) -> PyResult<PricingFunction> {
    match prices.len() {
        0 => Err(PyValueError::new_err("need at least one price")),
        1 => Ok(PricingFunction::Constant { p: prices[0] }),
        k => Ok(PricingFunction::KMarkets { k, prices }),
    }
}

/// Joint law of valuation and covariate on the unit square.
#[pyclass(frozen, skip_from_py_object, name = "Distribution", module = "pricedisc")]
#[derive(Clone)]
struct PyDistribution {
    spec: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn uniform() -> Self {
        Self { spec: DistributionSpec::UniformJoint }
    }

    /// `F(y | x) = y^(x+1)` with a uniform covariate.
    #[staticmethod]
    fn power() -> Self {
        Self { spec: DistributionSpec::PowerSimulated }
    }

    #[staticmethod]
    fn perturbed_uniform(a: f64, delta: f64) -> PyResult<Self> {
        Ok(Self { spec: DistributionSpec::perturbed_uniform(a, delta).py_err()? })
    }

    #[staticmethod]
    fn perturbed_conditional(a: f64, delta: f64, x0: f64) -> PyResult<Self> {
        Ok(Self { spec: DistributionSpec::perturbed_conditional(a, delta, x0).py_err()? })
    }

    #[staticmethod]
    fn packing(m: usize, a: f64, alpha: Vec<bool>) -> PyResult<Self> {
        Ok(Self { spec: DistributionSpec::packing(m, a, alpha).py_err()? })
    }

    fn cdf(&self, y: f64, x: f64) -> PyResult<f64> {
        dist::conditional_cdf(&self.spec, y, x).py_err()
    }

    fn density(&self, y: f64, x: f64) -> PyResult<f64> {
        dist::conditional_density(&self.spec, y, x).py_err()
    }

    /// `n` draws as `(y, x)` pairs.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
        let data = dist::sample(&self.spec, n, seed).py_err()?;
        Ok(data.points().iter().map(|p| (p.y, p.x)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?})", self.spec)
    }
}

#[pyfunction]
fn uniform_erm(valuations: Vec<f64>) -> PyResult<f64> {
    pricing::uniform_erm(&valuations).py_err()
}

/// Returns `(k_effective, prices)`.
#[pyfunction]
fn k_markets_erm(points: Vec<(f64, f64)>, k: usize) -> PyResult<(usize, Vec<f64>)> {
    let (pf, partition) = pricing::k_markets_erm(&dataset(&points)?, k).py_err()?;
    Ok((partition.k_effective, pf.prices()))
}

#[pyfunction]
fn k_schedule(n: usize, variant: &str) -> PyResult<usize> {
    let schedule: KSchedule = variant.parse().py_err()?;
    Ok(pricing::k_schedule(n, schedule))
}

/// Returns `(price, revenue)`.
#[pyfunction]
fn optimal_uniform_price(dist: &PyDistribution) -> PyResult<(f64, f64)> {
    oracle::optimal_uniform_price(&dist.spec, &QuadratureConfig::default()).py_err()
}

#[pyfunction]
fn optimal_3pd_revenue(py: Python<'_>, dist: &PyDistribution) -> PyResult<f64> {
    let spec = dist.spec.clone();
    py.detach(|| oracle::optimal_3pd_revenue(&spec, &QuadratureConfig::default()))
        .py_err()
}

/// Optimal price at each point of an evenly spaced covariate grid.
#[pyfunction]
fn optimal_3pd_policy(py: Python<'_>, dist: &PyDistribution, grid: usize) -> PyResult<Vec<f64>> {
    let spec = dist.spec.clone();
    let policy = py
        .detach(|| oracle::optimal_3pd_policy(&spec, grid, &QuadratureConfig::default()))
        .py_err()?;
    Ok(policy.prices().to_vec())
}

/// Revenue of a step price over `len(prices)` equal-width markets.
#[pyfunction]
fn expected_revenue(dist: &PyDistribution, prices: Vec<f64>) -> PyResult<f64> {
    oracle::expected_revenue(&dist.spec, &pricing_function(prices)?, &QuadratureConfig::default()).py_err()
}

#[pyfunction]
fn welfare(dist: &PyDistribution, prices: Vec<f64>) -> PyResult<f64> {
    oracle::welfare(&dist.spec, &pricing_function(prices)?, &QuadratureConfig::default()).py_err()
}

#[pyfunction]
fn phi_x(t: f64) -> f64 {
    adversarial::phi_x(t)
}

#[pyfunction]
fn phi_y(t: f64) -> f64 {
    adversarial::phi_y(t)
}

#[pyfunction]
fn hellinger_sq(py: Python<'_>, p: &PyDistribution, q: &PyDistribution) -> PyResult<f64> {
    let (p, q) = (p.spec.clone(), q.spec.clone());
    py.detach(|| adversarial::hellinger_sq(&p, &q, &QuadratureConfig::default()))
        .py_err()
}

#[pyfunction]
fn kl_divergence(py: Python<'_>, p: &PyDistribution, q: &PyDistribution) -> PyResult<f64> {
    let (p, q) = (p.spec.clone(), q.spec.clone());
    py.detach(|| adversarial::kl_divergence(&p, &q, &QuadratureConfig::default()))
        .py_err()
}

/// Codewords as integers, first coordinate in the most significant bit.
#[pyfunction]
fn gilbert_varshamov(m: usize) -> PyResult<Vec<u32>> {
    Ok(adversarial::gilbert_varshamov(m).py_err()?.words)
}

/// Returns `(p_star, (lo, hi), inside)`.
#[pyfunction]
fn price_interval_check(b: f64, delta: f64) -> PyResult<(f64, (f64, f64), bool)> {
    let c = adversarial::price_interval_check(b, delta).py_err()?;
    Ok((c.p_star, c.interval, c.inside))
}

/// Monte Carlo revenue-deficiency curve; each row is
/// `(n, mean_deficiency, std_error, mean_revenue)`.
#[pyfunction]
#[pyo3(signature = (dist, strategy, n_list, reps, seed))]
fn deficiency_curve(
    py: Python<'_>,
    dist: &PyDistribution,
    strategy: &str,
    n_list: Vec<usize>,
    reps: usize,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let strategy: Strategy = strategy.parse().py_err()?;
    let spec = dist.spec.clone();
    let curve = py
        .detach(|| Engine::new(spec, QuadratureConfig::default())?.deficiency_curve(strategy, &n_list, reps, seed))
        .py_err()?;
    Ok(curve
        .into_iter()
        .map(|p| (p.n, p.mean_deficiency, p.std_error, p.mean_revenue))
        .collect())
}

/// Log-log least squares; returns `(slope, intercept, r_squared)`.
#[pyfunction]
fn fit_rate(n: Vec<usize>, deficiency: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if n.len() != deficiency.len() {
        return Err(PyValueError::new_err("n and deficiency differ in length"));
    }
    let pairs: Vec<(usize, f64)> = n.into_iter().zip(deficiency).collect();
    let fit = experiment::fit_power_law(&pairs).py_err()?;
    Ok((fit.slope, fit.intercept, fit.r_squared))
}

#[pymodule]
fn pricedisc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(uniform_erm, m)?)?;
    m.add_function(wrap_pyfunction!(k_markets_erm, m)?)?;
    m.add_function(wrap_pyfunction!(k_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_uniform_price, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_3pd_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_3pd_policy, m)?)?;
    m.add_function(wrap_pyfunction!(expected_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(welfare, m)?)?;
    m.add_function(wrap_pyfunction!(phi_x, m)?)?;
    m.add_function(wrap_pyfunction!(phi_y, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger_sq, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(gilbert_varshamov, m)?)?;
    m.add_function(wrap_pyfunction!(price_interval_check, m)?)?;
    m.add_function(wrap_pyfunction!(deficiency_curve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    Ok(())
}
