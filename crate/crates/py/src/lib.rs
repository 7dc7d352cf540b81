//! Python bindings.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use toric_lg::critsolve::{solve_critical, CriticalPoint as CorePoint, SolverConfig};
use toric_lg::frobenius::{clifford_algebra, residue_pairings, trace_z, CliffordSpec};
use toric_lg::qh::{c1_eigen_check, qsr_identity_check, qsr_relations};
use toric_lg::report::{run as run_report, Command, ModelSpec, RunOptions};
use toric_lg::{NovikovSeries as Series, PotentialFunction, Rational, ToricData, Valuation};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn rational(s: &str) -> PyResult<Rational> {
    s.parse().map_err(value_err)
}

/// Truncated series `Σ aᵢ T^{λᵢ}`; exponents are strings such as "3/8".
#[pyclass(name = "NovikovSeries", from_py_object)]
#[derive(Clone)]
struct PySeries(Series);

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (terms, cutoff = None))]
    fn new(terms: Vec<(String, Complex64)>, cutoff: Option<&str>) -> PyResult<Self> {
        let terms = terms
            .iter()
            .map(|(e, c)| Ok((rational(e)?, *c)))
            .collect::<PyResult<Vec<_>>>()?;
        let cutoff = match cutoff {
            Some(c) => Valuation::Finite(rational(c)?),
            None => Valuation::Infinite,
        };
        Ok(PySeries(Series::from_terms(terms, cutoff)))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(PySeries).map_err(value_err)
    }

    /// Leading exponent, or None for the zero series.
    fn valuation(&self) -> Option<String> {
        self.0.valuation().finite().map(|v| v.to_string())
    }

    fn cutoff(&self) -> Option<String> {
        self.0.cutoff().finite().map(|v| v.to_string())
    }

    fn terms(&self) -> Vec<(String, Complex64)> {
        self.0.terms().iter().map(|(e, c)| (e.to_string(), *c)).collect()
    }

    fn coefficient(&self, exponent: &str) -> PyResult<Complex64> {
        Ok(self.0.coefficient(rational(exponent)?))
    }

    fn inv(&self) -> PyResult<Self> {
        self.0.inv().map(PySeries).map_err(value_err)
    }

    fn exp(&self) -> PyResult<Self> {
        self.0.exp().map(PySeries).map_err(value_err)
    }

    fn truncate(&self, bound: &str) -> PyResult<Self> {
        Ok(PySeries(self.0.truncate(rational(bound)?)))
    }

    fn eval(&self, t: f64) -> PyResult<Complex64> {
        self.0.eval(t).map_err(value_err)
    }

    fn __add__(&self, other: &Self) -> Self {
        PySeries(self.0.add(&other.0))
    }

    fn __sub__(&self, other: &Self) -> Self {
        PySeries(self.0.sub(&other.0))
    }

    fn __mul__(&self, other: &Self) -> Self {
        PySeries(self.0.mul(&other.0))
    }

    fn __neg__(&self) -> Self {
        PySeries(self.0.neg())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("NovikovSeries({:?})", self.0.to_string())
    }
}

/// Moment polytope of a compact toric manifold.
#[pyclass(name = "ToricModel", from_py_object)]
#[derive(Clone)]
struct PyToric(ToricData);

#[pymethods]
impl PyToric {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        ToricData::builtin(name).map(PyToric).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(doc: &str) -> PyResult<Self> {
        ToricData::from_json(doc).map(PyToric).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    /// `(normal, lambda)` per facet.
    fn facets(&self) -> Vec<(Vec<i64>, String)> {
        self.0.facets.iter().map(|f| (f.normal.clone(), f.lambda.to_string())).collect()
    }

    fn vertices(&self) -> Vec<Vec<String>> {
        let (vs, _) = self.0.vertices_and_rank();
        vs.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect()
    }

    fn betti_rank(&self) -> usize {
        self.0.betti_rank()
    }

    /// Quantum Stanley–Reisner and linear relations as strings.
    fn qsr_relations(&self) -> PyResult<(Vec<String>, Vec<String>)> {
        let p = qsr_relations(&self.0).map_err(value_err)?;
        Ok((p.qsr_strings(), p.linear_strings()))
    }

    /// `(eigenvalues of c1, critical values, residual)` at `t`.
    #[pyo3(signature = (t, seed = 0))]
    fn c1_check(&self, t: f64, seed: u64) -> PyResult<(Vec<Complex64>, Vec<Complex64>, f64)> {
        let c = c1_eigen_check(&self.0, t, seed).map_err(runtime_err)?;
        Ok((c.eigenvalues_qh, c.critical_values, c.residual))
    }

    fn potential(&self) -> PyResult<PyPotential> {
        toric_lg::potential::default_potential(&self.0)
            .map(PyPotential)
            .map_err(value_err)
    }
}

/// Critical point of a potential, tracked over the sample values of `t`.
#[pyclass(name = "CriticalPoint", from_py_object)]
#[derive(Clone)]
struct PyPoint(CorePoint);

#[pymethods]
impl PyPoint {
    #[getter]
    fn valuation(&self) -> Vec<String> {
        self.0.valuation.iter().map(|v| v.to_string()).collect()
    }

    #[getter]
    fn interior(&self) -> bool {
        self.0.interior
    }

    #[getter]
    fn nondegenerate(&self) -> bool {
        self.0.nondegenerate
    }

    #[getter]
    fn t_samples(&self) -> Vec<f64> {
        self.0.samples.iter().map(|s| s.t).collect()
    }

    /// Absolute coordinates at a sampled `t`.
    fn y(&self, t: f64) -> PyResult<Vec<Complex64>> {
        self.sample(t).map(|s| s.y.clone())
    }

    fn critical_value(&self, t: f64) -> PyResult<Complex64> {
        self.sample(t).map(|s| s.crit_value)
    }

    fn hessian_det(&self, t: f64) -> PyResult<Complex64> {
        self.sample(t).map(|s| s.hess_det)
    }

    fn __repr__(&self) -> String {
        format!("CriticalPoint(valuation={:?}, interior={})", self.valuation(), self.0.interior)
    }
}

impl PyPoint {
    fn sample(&self, t: f64) -> PyResult<&toric_lg::critsolve::PointSample> {
        self.0
            .sample(t)
            .ok_or_else(|| value_err(format!("t = {t} is not a sample of this point")))
    }
}

/// Landau–Ginzburg potential.
#[pyclass(name = "Potential", from_py_object)]
#[derive(Clone)]
struct PyPotential(PotentialFunction);

#[pymethods]
impl PyPotential {
    /// A built-in model name such as "f2(1/4)", or a JSON document.
    #[staticmethod]
    fn load(model: &str) -> PyResult<Self> {
        spec(model).resolve().map(|m| PyPotential(m.potential)).map_err(value_err)
    }

    /// `(monomial, coefficient)` pairs.
    fn terms(&self) -> Vec<(String, String)> {
        self.0
            .poly
            .terms()
            .map(|(k, c)| (toric_lg::potential::monomial_string(k), c.to_string()))
            .collect()
    }

    fn eval(&self, y: Vec<Complex64>, t: f64) -> PyResult<Complex64> {
        self.0.poly.eval(&y, t).map_err(value_err)
    }

    #[pyo3(signature = (t_samples = vec![0.05, 0.1, 0.2], seed = 0))]
    fn critical_points(&self, t_samples: Vec<f64>, seed: u64) -> PyResult<Vec<PyPoint>> {
        let cfg = SolverConfig {
            t_samples,
            ..SolverConfig::with_seed(seed)
        };
        let pts = solve_critical(&self.0, &cfg).map_err(runtime_err)?;
        Ok(pts.into_iter().map(PyPoint).collect())
    }

    /// `(1/det Hess, 1/Z)` at a nondegenerate point.
    fn residue_pairing(&self, point: &PyPoint, t: f64) -> PyResult<(Complex64, Complex64)> {
        let r = residue_pairings(&self.0, &point.0, t).map_err(runtime_err)?;
        Ok((r.simplified, r.z_based))
    }

    #[pyo3(signature = (trials = 100, seed = 0))]
    fn qsr_residual(&self, trials: usize, seed: u64) -> PyResult<f64> {
        qsr_identity_check(&self.0, trials, seed).map_err(runtime_err)
    }
}

fn spec(model: &str) -> ModelSpec {
    if model.trim_start().starts_with('{') {
        ModelSpec {
            document: Some(model.to_string()),
            ..Default::default()
        }
    } else {
        ModelSpec::builtin(model)
    }
}

/// Trace `Z` of the Clifford algebra with diagonal form `d`.
#[pyfunction]
fn clifford_trace(d: Vec<Complex64>) -> PyResult<Complex64> {
    let alg = clifford_algebra(&CliffordSpec::new(d)).map_err(value_err)?;
    trace_z(&alg).map_err(runtime_err)
}

/// Runs a CLI command and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (command, model, t_samples = vec![0.05, 0.1, 0.2], seed = 0))]
fn run(command: &str, model: &str, t_samples: Vec<f64>, seed: u64) -> PyResult<String> {
    let command: Command = command.parse().map_err(value_err)?;
    let model = spec(model).resolve().map_err(value_err)?;
    let opts = RunOptions {
        t_samples,
        seed,
        ..Default::default()
    };
    run_report(command, &model, &opts).map(|r| r.to_json()).map_err(runtime_err)
}

#[pymodule]
#[pyo3(name = "toric_lg")]
fn toric_lg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyToric>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyPoint>()?;
    m.add_function(wrap_pyfunction!(clifford_trace, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
