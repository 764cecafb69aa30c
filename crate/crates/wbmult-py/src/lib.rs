use pyo3::basic::CompareOp;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;
use std::path::PathBuf;
use wbmult::analyzer;
use wbmult::corpus::{self, ExampleCase, VerifyOptions};
use wbmult::numeric::{self, TruncationResult};
use wbmult::scalar::ScalarSum;
use wbmult::sequence::{self, dsl::parse_weight, SequenceSpec};
use wbmult::series::Extreme;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn extreme(e: &Extreme) -> serde_json::Value {
    serde_json::json!({ "text": e.to_string(), "value": e.to_f64(), "finite": e.is_finite() })
}

/// Exact scalar: a finite sum of rationals times products of prime powers.
#[pyclass(name = "Scalar", module = "wbmult", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScalar(ScalarSum);

#[pymethods]
impl PyScalar {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let w = parse_weight(text).map_err(PyValueError::new_err)?;
        let c = w.shape.is_constant().then(|| w.c.clone());
        c.map(PyScalar).ok_or_else(|| PyValueError::new_err(format!("`{}` depends on t", text)))
    }

    #[staticmethod]
    fn from_int(n: i64) -> Self {
        PyScalar(ScalarSum::from_int(n))
    }

    fn __add__(&self, other: &PyScalar) -> Self {
        PyScalar(self.0.add(&other.0))
    }

    fn __sub__(&self, other: &PyScalar) -> Self {
        PyScalar(self.0.sub(&other.0))
    }

    fn __mul__(&self, other: &PyScalar) -> Self {
        PyScalar(self.0.mul(&other.0))
    }

    fn __neg__(&self) -> Self {
        PyScalar(self.0.neg())
    }

    fn sign(&self) -> PyResult<i8> {
        self.0.sign().map_err(|e| PyArithmeticError::new_err(e.to_string()))
    }

    fn __richcmp__(&self, other: &PyScalar, op: CompareOp) -> PyResult<bool> {
        let ord = self.0.cmp(&other.0).map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
        Ok(op.matches(ord))
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Scalar('{}')", self.0)
    }
}

/// A block-structured sequence of weighted basis vectors.
#[pyclass(name = "Sequence", module = "wbmult", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySequence(SequenceSpec);

#[pymethods]
impl PySequence {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        SequenceSpec::parse(text).map(PySequence).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    /// Frame-type classification as a dict.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let c = sequence::classify_sequence(&self.0).map_err(value_err)?;
        let doc = serde_json::json!({
            "kind": c.kind(),
            "summary": c.to_string(),
            "bessel": c.bessel,
            "frame": c.frame,
            "riesz": c.riesz,
            "nba": c.nba,
            "nbb": c.nbb,
            "semi_normalized": c.norm_sn,
            "complete": c.complete,
            "injective": c.injective,
            "upper": extreme(&c.upper),
            "lower": extreme(&c.lower),
            "norm_sup": extreme(&c.norm_sup),
            "norm_inf": extreme(&c.norm_inf),
        });
        to_py(py, &doc)
    }

    /// Symbol classification: "SN", "bounded non-SN" or "unbounded".
    fn symbol_kind(&self) -> PyResult<String> {
        Ok(sequence::classify_symbol(&self.0).map_err(value_err)?.kind.to_string())
    }

    /// `(weight, index)` for every term of the first `blocks` blocks.
    fn enumerate(&self, blocks: i64) -> Vec<(f64, Option<i64>)> {
        self.0.enumerate(blocks)
    }

    fn __str__(&self) -> String {
        self.0.to_dsl()
    }

    fn __repr__(&self) -> String {
        format!("Sequence('{}')", self.0.name)
    }
}

/// Finite section of the multiplier matrix.
#[pyclass(name = "Truncation", module = "wbmult", frozen)]
struct PyTruncation(TruncationResult);

#[pymethods]
impl PyTruncation {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn entries_used(&self) -> u64 {
        self.0.entries_used
    }

    #[getter]
    fn tail_bound(&self) -> Option<f64> {
        self.0.tail_bound
    }

    /// Row-major list of rows.
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.0.matrix.chunks(self.0.n).map(|r| r.to_vec()).collect()
    }

    fn get(&self, k: usize, j: usize) -> PyResult<f64> {
        if k == 0 || j == 0 || k > self.0.n || j > self.0.n {
            return Err(PyValueError::new_err(format!("index ({}, {}) outside 1..={}", k, j, self.0.n)));
        }
        Ok(self.0.get(k, j))
    }

    /// `(sigma_min, sigma_max)`.
    fn singular_extremes(&self) -> PyResult<(f64, f64)> {
        numeric::singular_extremes(&self.0).map_err(value_err)
    }
}

/// One example case loaded from a `.case` file.
#[pyclass(name = "Case", module = "wbmult", frozen)]
struct PyCase(ExampleCase);

#[pymethods]
impl PyCase {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        corpus::load_case(&path).map(PyCase).map_err(value_err)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id.clone()
    }

    #[getter]
    fn cell(&self) -> String {
        self.0.cell.to_string()
    }

    #[getter]
    fn m(&self) -> PySequence {
        PySequence(self.0.m.clone())
    }

    #[getter]
    fn phi(&self) -> PySequence {
        PySequence(self.0.phi.clone())
    }

    #[getter]
    fn psi(&self) -> PySequence {
        PySequence(self.0.psi.clone())
    }

    fn analyze<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let c = &self.0;
        let a = analyzer::analyze(&c.m, &c.phi, &c.psi, c.witness.as_ref()).map_err(value_err)?;
        to_py(py, &a)
    }

    #[pyo3(signature = (numeric = true))]
    fn verify<'py>(&self, py: Python<'py>, numeric: bool) -> PyResult<Bound<'py, PyAny>> {
        let opts = VerifyOptions { numeric, ..VerifyOptions::default() };
        let report = py.detach(|| corpus::verify_case(&self.0, &opts));
        to_py(py, &report)
    }

    #[pyo3(signature = (n = 64, budget = 10_000))]
    fn truncate(&self, py: Python<'_>, n: usize, budget: i64) -> PyResult<PyTruncation> {
        let c = &self.0;
        py.detach(|| numeric::truncate_matrix(&c.m, &c.phi, &c.psi, n, budget)).map(PyTruncation).map_err(value_err)
    }

    #[pyo3(signature = (blocks = 100))]
    fn stress(&self, blocks: i64) -> PyResult<Option<(f64, f64)>> {
        let c = &self.0;
        let Some(f) = &c.stress else { return Ok(None) };
        let run = |s| numeric::rearrangement_stress(&c.m, &c.phi, &c.psi, f, s, blocks).map_err(value_err);
        Ok(Some((run(numeric::StressStrategy::PositiveOnly)?, run(numeric::StressStrategy::AlternatingWorst)?)))
    }

    fn __repr__(&self) -> String {
        format!("Case('{}')", self.0.id)
    }
}

/// Classification summary line for a sequence in DSL text.
#[pyfunction]
fn classify(text: &str) -> PyResult<String> {
    let spec = SequenceSpec::parse(text).map_err(value_err)?;
    Ok(sequence::classify_sequence(&spec).map_err(value_err)?.to_string())
}

/// Exact analysis of `M_{m,phi,psi}`. `m` may be a single weight such as `"t^(-1)"`.
/// Without `psi` the operator is `M_{m,phi,phi}`.
#[pyfunction]
#[pyo3(signature = (m, phi, psi = None))]
fn analyze<'py>(py: Python<'py>, m: &str, phi: &PySequence, psi: Option<&PySequence>) -> PyResult<Bound<'py, PyAny>> {
    let psi = psi.map_or(&phi.0, |p| &p.0);
    let m = if m.trim_start().starts_with("seq") {
        SequenceSpec::parse(m).map_err(value_err)?
    } else {
        corpus::uniform_symbol(m, &phi.0).map_err(PyValueError::new_err)?
    };
    let a = analyzer::analyze(&m, &phi.0, psi, None).map_err(value_err)?;
    to_py(py, &a)
}

/// Numeric frame bounds of the truncated frame operator on `span(e_1..e_n)`.
#[pyfunction]
#[pyo3(signature = (phi, n = 128, budget = 10_000))]
fn frame_bounds(py: Python<'_>, phi: &PySequence, n: usize, budget: i64) -> PyResult<(f64, f64)> {
    py.detach(|| numeric::frame_bounds_numeric(&phi.0, n, budget)).map_err(value_err)
}

/// Verifies a corpus directory and its `tables.toml`; returns the summary, cases and cells.
#[pyfunction]
#[pyo3(signature = (dir, probes = 100, seed = None, numeric = true))]
fn verify_corpus<'py>(
    py: Python<'py>,
    dir: PathBuf,
    probes: usize,
    seed: Option<u64>,
    numeric: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut opts = VerifyOptions { probes, numeric, ..VerifyOptions::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let (missing, reports, cells, summary) = py.detach(|| -> Result<_, corpus::CorpusError> {
        let cases = corpus::load_corpus(&dir)?;
        let rows = corpus::load_tables(&dir.join("tables.toml"))?;
        let missing = corpus::completeness(&rows, &cases);
        let reports = corpus::verify_corpus(&cases, &opts);
        let (cells, summary) = corpus::verify_tables(&rows, &cases, &reports, &opts);
        Ok((missing, reports, cells, summary))
    })
    .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("summary", to_py(py, &summary)?)?;
    out.set_item("missing", missing)?;
    out.set_item("cases", to_py(py, &reports)?)?;
    out.set_item("cells", to_py(py, &cells)?)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "wbmult")]
fn wbmult_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScalar>()?;
    m.add_class::<PySequence>()?;
    m.add_class::<PyTruncation>()?;
    m.add_class::<PyCase>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(frame_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(verify_corpus, m)?)?;
    Ok(())
}
