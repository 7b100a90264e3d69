use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;
use pyo3::pyclass::CompareOp;

use holocrit::chamber::ChamberSpec;
use holocrit::cp1_sim::{Chart, Section, SolverOptions};
use holocrit::Error;
use num_bigint::BigInt;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse(_) | Error::Irrational { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::DivisionByZero => PyZeroDivisionError::new_err(e.to_string()),
        Error::Capacity { .. } | Error::Degenerate(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports serialize")
}

/// Exact rational number.
#[pyclass(name = "Rational", module = "pyholocrit", frozen, from_py_object)]
#[derive(Clone)]
struct PyRational(holocrit::Rational);

/// Accepts a Rational, an int or a "n/d" string wherever a rational is expected.
#[derive(FromPyObject)]
enum RationalLike {
    Rational(PyRational),
    Int(BigInt),
    Text(String),
}

impl RationalLike {
    fn into_rational(self) -> PyResult<holocrit::Rational> {
        match self {
            RationalLike::Rational(r) => Ok(r.0),
            RationalLike::Int(n) => Ok(holocrit::Rational::from_integer(n)),
            RationalLike::Text(s) => s.parse().map_err(to_py_err),
        }
    }
}

#[pymethods]
impl PyRational {
    #[new]
    #[pyo3(signature = (numerator, denominator = None))]
    fn new(numerator: RationalLike, denominator: Option<BigInt>) -> PyResult<Self> {
        let value = numerator.into_rational()?;
        match denominator {
            None => Ok(PyRational(value)),
            Some(d) => {
                let d = holocrit::Rational::from_integer(d);
                value.checked_div(&d).map(PyRational).map_err(to_py_err)
            }
        }
    }

    #[getter]
    fn numerator(&self) -> BigInt {
        self.0.numer().clone()
    }

    #[getter]
    fn denominator(&self) -> BigInt {
        self.0.denom().clone()
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Rational('{}')", self.0)
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }

    fn __richcmp__(&self, other: RationalLike, op: CompareOp) -> PyResult<bool> {
        let other = other.into_rational()?;
        Ok(op.matches(self.0.cmp(&other)))
    }

    fn __add__(&self, other: RationalLike) -> PyResult<Self> {
        Ok(PyRational(&self.0 + &other.into_rational()?))
    }

    fn __radd__(&self, other: RationalLike) -> PyResult<Self> {
        self.__add__(other)
    }

    fn __sub__(&self, other: RationalLike) -> PyResult<Self> {
        Ok(PyRational(&self.0 - &other.into_rational()?))
    }

    fn __rsub__(&self, other: RationalLike) -> PyResult<Self> {
        Ok(PyRational(&other.into_rational()? - &self.0))
    }

    fn __mul__(&self, other: RationalLike) -> PyResult<Self> {
        Ok(PyRational(&self.0 * &other.into_rational()?))
    }

    fn __rmul__(&self, other: RationalLike) -> PyResult<Self> {
        self.__mul__(other)
    }

    fn __truediv__(&self, other: RationalLike) -> PyResult<Self> {
        self.0
            .checked_div(&other.into_rational()?)
            .map(PyRational)
            .map_err(to_py_err)
    }

    fn __neg__(&self) -> Self {
        PyRational(-&self.0)
    }
}

fn wrap_map(map: &BTreeMap<usize, holocrit::Rational>) -> BTreeMap<usize, PyRational> {
    map.iter()
        .map(|(&q, v)| (q, PyRational(v.clone())))
        .collect()
}

/// Exact expected count of index-`q` critical points on CP^m for O(N).
#[pyfunction]
fn cpm_exact_count(m: usize, n: u64, q: usize) -> PyResult<PyRational> {
    holocrit::counts::cpm_exact_count(m, n, q)
        .map(PyRational)
        .map_err(to_py_err)
}

#[pyfunction]
fn signed_count(m: usize, n: u64) -> PyResult<PyRational> {
    holocrit::counts::signed_count(m, n)
        .map(PyRational)
        .map_err(to_py_err)
}

#[pyfunction]
fn leading_coeff(m: usize, q: usize) -> PyResult<PyRational> {
    holocrit::counts::leading_coeff(m, q)
        .map(PyRational)
        .map_err(to_py_err)
}

#[pyfunction]
fn leading_total(m: usize) -> PyResult<PyRational> {
    holocrit::counts::leading_total(m)
        .map(PyRational)
        .map_err(to_py_err)
}

/// Chamber integral over ordered coordinates with `p` positive entries.
#[pyfunction]
fn chamber_integral(py: Python<'_>, m: usize, p: usize, c: RationalLike) -> PyResult<PyRational> {
    let spec = ChamberSpec::new(m, p, c.into_rational()?).map_err(to_py_err)?;
    py.detach(|| holocrit::chamber::chamber_integral(&spec))
        .map(PyRational)
        .map_err(to_py_err)
}

/// Selberg integral; `beta=None` selects the exponential form.
///
/// Returns `(float_value, exact)` where `exact` is a string such as
/// `"3/4*pi^(1/2)"`, or `None` when only a log-gamma value is available.
#[pyfunction]
#[pyo3(signature = (n, alpha, gamma, beta = None))]
fn selberg(
    n: usize,
    alpha: RationalLike,
    gamma: RationalLike,
    beta: Option<RationalLike>,
) -> PyResult<(f64, Option<String>)> {
    let alpha = alpha.into_rational()?;
    let gamma = gamma.into_rational()?;
    let value = match beta {
        Some(b) => holocrit::selberg::selberg_finite(&holocrit::selberg::SelbergParams::new(
            n,
            alpha,
            b.into_rational()?,
            gamma,
        )),
        None => holocrit::selberg::selberg_exp(n, &alpha, &gamma),
    }
    .map_err(to_py_err)?;
    Ok((value.to_f64(), value.exact().map(|v| v.to_string())))
}

#[pyclass(name = "CountReport", module = "pyholocrit", frozen, get_all)]
struct PyCountReport {
    m: usize,
    #[pyo3(name = "N")]
    n: u64,
    per_q: BTreeMap<usize, PyRational>,
    total: PyRational,
    signed: PyRational,
    json: String,
}

#[pymethods]
impl PyCountReport {
    fn to_json(&self) -> String {
        self.json.clone()
    }
}

#[pyfunction]
fn count_report(m: usize, n: u64) -> PyResult<PyCountReport> {
    let r = holocrit::counts::count_report(m, n).map_err(to_py_err)?;
    Ok(PyCountReport {
        m: r.m,
        n: r.n_deg,
        per_q: wrap_map(&r.per_q),
        total: PyRational(r.total.clone()),
        signed: PyRational(r.signed.clone()),
        json: json(&r),
    })
}

#[pyclass(name = "LeadingReport", module = "pyholocrit", frozen, get_all)]
struct PyLeadingReport {
    m: usize,
    n_q: BTreeMap<usize, PyRational>,
    n_total: PyRational,
    json: String,
}

#[pymethods]
impl PyLeadingReport {
    fn to_json(&self) -> String {
        self.json.clone()
    }
}

#[pyfunction]
fn leading_report(m: usize) -> PyResult<PyLeadingReport> {
    let r = holocrit::counts::leading_report(m).map_err(to_py_err)?;
    Ok(PyLeadingReport {
        m: r.m,
        n_q: wrap_map(&r.n_q),
        n_total: PyRational(r.n_total.clone()),
        json: json(&r),
    })
}

#[pyclass(name = "B0qEstimate", module = "pyholocrit", frozen, get_all)]
struct PyB0qEstimate {
    m: usize,
    q: usize,
    samples: u64,
    estimate: f64,
    stderr: f64,
    excluded: u64,
    seed: u64,
    /// `(value, stderr)` rescaled to compare with `leading_coeff(m, q)`.
    leading_coeff_view: (f64, f64),
    json: String,
}

#[pymethods]
impl PyB0qEstimate {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "B0qEstimate(m={}, q={}, estimate={}, stderr={})",
            self.m, self.q, self.estimate, self.stderr
        )
    }
}

impl From<holocrit::rmt_mc::B0qEstimate> for PyB0qEstimate {
    fn from(e: holocrit::rmt_mc::B0qEstimate) -> Self {
        PyB0qEstimate {
            m: e.m,
            q: e.q,
            samples: e.samples,
            estimate: e.estimate,
            stderr: e.stderr,
            excluded: e.excluded,
            seed: e.seed,
            leading_coeff_view: e.leading_coeff_view(),
            json: json(&e),
        }
    }
}

/// Random-matrix Monte Carlo estimates for every index in `[m, 2m]`.
#[pyfunction]
#[pyo3(signature = (m, samples = 1_000_000, seed = 0))]
fn estimate_b0q(py: Python<'_>, m: usize, samples: u64, seed: u64) -> PyResult<Vec<PyB0qEstimate>> {
    let estimates = py
        .detach(|| holocrit::rmt_mc::estimate_all(m, samples, seed))
        .map_err(to_py_err)?;
    Ok(estimates.into_iter().map(PyB0qEstimate::from).collect())
}

#[pyclass(name = "CriticalPoint", module = "pyholocrit", frozen, get_all)]
struct PyCriticalPoint {
    z: Complex64,
    /// 0 for the coordinate z, 1 for zeta = 1/z.
    chart: u8,
    morse_index: u8,
    hessian_eigs: (f64, f64),
    residual: f64,
}

#[pymethods]
impl PyCriticalPoint {
    fn __repr__(&self) -> String {
        format!(
            "CriticalPoint(z={}, chart={}, morse_index={})",
            self.z, self.chart, self.morse_index
        )
    }
}

/// Critical points of `log ||s||^2` for the section with basis coefficients `coeffs`.
#[pyfunction]
fn find_critical_points(coeffs: Vec<Complex64>) -> PyResult<Vec<PyCriticalPoint>> {
    let section = Section::new(coeffs).map_err(to_py_err)?;
    let outcome = holocrit::cp1_sim::find_critical_points(&section, &SolverOptions::default())
        .map_err(to_py_err)?;
    if !outcome.solver_ok() {
        return Err(PyRuntimeError::new_err(
            "solver flagged this section (degenerate, marginal or unconverged point)",
        ));
    }
    Ok(outcome
        .points
        .into_iter()
        .map(|p| PyCriticalPoint {
            z: p.z,
            chart: match p.chart {
                Chart::Affine => 0,
                Chart::Inverted => 1,
            },
            morse_index: p.morse_index,
            hessian_eigs: (p.hessian_eigs[0], p.hessian_eigs[1]),
            residual: p.residual,
        })
        .collect())
}

#[pyclass(name = "EnsembleStats", module = "pyholocrit", frozen, get_all)]
struct PyEnsembleStats {
    #[pyo3(name = "N")]
    n: usize,
    trials: u64,
    seed: u64,
    mean_q1: f64,
    stderr_q1: f64,
    mean_q2: f64,
    stderr_q2: f64,
    failure_rate: f64,
    excluded: u64,
    unreliable: bool,
    /// `(trial, count_q1, count_q2, solver_ok)` per trial.
    per_trial: Vec<(u64, usize, usize, bool)>,
    json: String,
}

#[pymethods]
impl PyEnsembleStats {
    fn to_json(&self) -> String {
        self.json.clone()
    }
}

/// Simulates `trials` random sections of O(N) on CP^1.
#[pyfunction]
#[pyo3(signature = (n, trials = 2000, seed = 0))]
fn run_trials(py: Python<'_>, n: usize, trials: u64, seed: u64) -> PyResult<PyEnsembleStats> {
    let s = py
        .detach(|| holocrit::cp1_sim::run_trials(n, trials, seed))
        .map_err(to_py_err)?;
    Ok(PyEnsembleStats {
        n: s.n_deg,
        trials: s.trials,
        seed: s.seed,
        mean_q1: s.mean_q1,
        stderr_q1: s.stderr_q1,
        mean_q2: s.mean_q2,
        stderr_q2: s.stderr_q2,
        failure_rate: s.failure_rate,
        excluded: s.excluded,
        unreliable: s.unreliable,
        per_trial: s
            .per_trial
            .iter()
            .map(|t| (t.trial, t.count_q1, t.count_q2, t.solver_ok))
            .collect(),
        json: json(&s),
    })
}

/// Runs the self-checks; returns `(id, name, passed, detail)` rows.
#[pyfunction]
#[pyo3(signature = (level = "exact", samples = 1_000_000, trials = 2000, seed = None))]
fn verify(
    py: Python<'_>,
    level: &str,
    samples: u64,
    trials: u64,
    seed: Option<u64>,
) -> PyResult<Vec<(u8, String, bool, String)>> {
    let level: holocrit::verify::Level = level.parse().map_err(to_py_err)?;
    let config = holocrit::verify::VerifyConfig {
        mc_samples: samples,
        sim_trials: trials,
        seed: seed.unwrap_or(holocrit::verify::VerifyConfig::default().seed),
    };
    let checks = py
        .detach(|| holocrit::verify::run(level, &config))
        .map_err(to_py_err)?;
    Ok(checks
        .into_iter()
        .map(|c| (c.id, c.name.to_string(), c.passed, c.detail))
        .collect())
}

#[pymodule]
fn pyholocrit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRational>()?;
    m.add_class::<PyCountReport>()?;
    m.add_class::<PyLeadingReport>()?;
    m.add_class::<PyB0qEstimate>()?;
    m.add_class::<PyCriticalPoint>()?;
    m.add_class::<PyEnsembleStats>()?;
    m.add_function(wrap_pyfunction!(cpm_exact_count, m)?)?;
    m.add_function(wrap_pyfunction!(signed_count, m)?)?;
    m.add_function(wrap_pyfunction!(leading_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(leading_total, m)?)?;
    m.add_function(wrap_pyfunction!(chamber_integral, m)?)?;
    m.add_function(wrap_pyfunction!(selberg, m)?)?;
    m.add_function(wrap_pyfunction!(count_report, m)?)?;
    m.add_function(wrap_pyfunction!(leading_report, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_b0q, m)?)?;
    m.add_function(wrap_pyfunction!(find_critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
