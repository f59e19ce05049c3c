//! Python bindings. Moment values cross the boundary as strings (`"7/6"`)
//! when exact and as floats otherwise.

use std::collections::HashMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::vandconv::algebra::{self, parse_expression, AspectRatio, Attributes, Basis, Format, Normalization};
use ::vandconv::convolution::{self, GramSource, Model, MomentSequence, SequenceNormalization, Unknown};
use ::vandconv::density::PhaseDensity;
use ::vandconv::ensembles::{self, EnsembleKind};
use ::vandconv::simulate::{self, SimulationBindings};
use ::vandconv::{partition, rational, Error, Value};

create_exception!(vandconv, CapacityError, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Capacity(_) => CapacityError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ::vandconv::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Exact(r) => rational::to_string(r).into_pyobject(py)?.into_any().unbind(),
        Value::Float(x) => x.into_pyobject(py)?.into_any().unbind(),
    })
}

fn values_to_py(py: Python<'_>, vs: &[Value]) -> PyResult<Vec<Py<PyAny>>> {
    vs.iter().map(|v| value_to_py(py, v)).collect()
}

fn values_from_py(items: &[Bound<'_, PyAny>]) -> PyResult<Vec<Value>> {
    items
        .iter()
        .map(|x| {
            if let Ok(s) = x.extract::<String>() {
                Value::parse(&s).py()
            } else if let Ok(i) = x.extract::<i64>() {
                Ok(Value::Exact(rational::int(i)))
            } else {
                Ok(Value::Float(x.extract::<f64>()?))
            }
        })
        .collect()
}

fn sequence(items: &[Bound<'_, PyAny>], normalization: &str, c: &str) -> PyResult<MomentSequence> {
    let n: SequenceNormalization = normalization.parse().py()?;
    MomentSequence::new(n, rational::parse(c).py()?, values_from_py(items)?).py()
}

fn attributes(phases: Option<HashMap<String, String>>, c: Option<HashMap<String, String>>) -> PyResult<Attributes> {
    let key = |k: &str| -> PyResult<u32> {
        k.strip_prefix('V')
            .and_then(|i| i.parse().ok())
            .ok_or_else(|| PyValueError::new_err(format!("expected a key like 'V1', got {k:?}")))
    };
    let mut a = Attributes::default();
    for (k, v) in phases.unwrap_or_default() {
        a.set_phase(key(&k)?, &v);
    }
    for (k, v) in c.unwrap_or_default() {
        a.set_c(key(&k)?, AspectRatio::parse(&v).py()?);
    }
    Ok(a)
}

fn gram(spec: &str, c: &str) -> PyResult<GramSource> {
    Ok(GramSource::Density { density: PhaseDensity::load(spec).py()?, c: rational::parse(c).py()? })
}

/// Formulas of orders 1..=order as strings in the requested format.
#[pyfunction]
#[pyo3(signature = (expr, order, phases=None, c=None, format="latex", normalization="scaled", basis="v"))]
fn formula(
    expr: &str,
    order: usize,
    phases: Option<HashMap<String, String>>,
    c: Option<HashMap<String, String>>,
    format: &str,
    normalization: &str,
    basis: &str,
) -> PyResult<Vec<String>> {
    let format: Format = format.parse().py()?;
    let normalization: Normalization = normalization.parse().py()?;
    let basis: Basis = basis.parse().py()?;
    let e = parse_expression(expr, &attributes(phases, c)?).py()?;
    (1..=order)
        .map(|n| Ok(algebra::emit(&algebra::moment_formula(&e, n, normalization, basis).py()?, format)))
        .collect()
}

/// `"SpectraOnly"`, `"PhaseDependent: ..."` or `"Unsupported: ..."`.
#[pyfunction]
#[pyo3(signature = (expr, phases=None, c=None))]
fn classify(expr: &str, phases: Option<HashMap<String, String>>, c: Option<HashMap<String, String>>) -> PyResult<String> {
    let cl = algebra::classify(&parse_expression(expr, &attributes(phases, c)?).py()?);
    Ok(match &cl {
        algebra::Classification::SpectraOnly => cl.name().to_string(),
        algebra::Classification::PhaseDependent { reason } | algebra::Classification::Unsupported { reason } => {
            format!("{}: {reason}", cl.name())
        }
    })
}

/// Forward convolution. `d` holds D moments in `d_normalization`; `v`, `v2`
/// are phase densities (`"uniform"` or a CSV path).
#[pyfunction]
#[pyo3(signature = (model, orders, d=None, d_normalization="raw", v="uniform", c_v="1", v2=None, c_v2="1"))]
#[allow(clippy::too_many_arguments)]
fn convolve(
    py: Python<'_>,
    model: &str,
    orders: usize,
    d: Option<Vec<Bound<'_, PyAny>>>,
    d_normalization: &str,
    v: &str,
    c_v: &str,
    v2: Option<&str>,
    c_v2: &str,
) -> PyResult<Vec<Py<PyAny>>> {
    let model: Model = model.parse().py()?;
    let d = d.map(|items| sequence(&items, d_normalization, c_v)).transpose()?;
    let v = gram(v, c_v)?;
    let v2 = v2.map(|s| gram(s, c_v2)).transpose()?;
    let out = convolution::convolve(model, d.as_ref(), &v, v2.as_ref(), orders).py()?;
    values_to_py(py, &out.values)
}

/// Recovers the D side (`unknown="d"`) or a Gram side (`unknown="v"`).
#[pyfunction]
#[pyo3(signature = (model, m, m_normalization="mndef", unknown="d", d=None, d_normalization="raw", v="uniform", c_v="1", c_unknown=None))]
#[allow(clippy::too_many_arguments)]
fn deconvolve(
    py: Python<'_>,
    model: &str,
    m: Vec<Bound<'_, PyAny>>,
    m_normalization: &str,
    unknown: &str,
    d: Option<Vec<Bound<'_, PyAny>>>,
    d_normalization: &str,
    v: &str,
    c_v: &str,
    c_unknown: Option<&str>,
) -> PyResult<Vec<Py<PyAny>>> {
    let model: Model = model.parse().py()?;
    let unknown = match unknown {
        "d" | "D" => Unknown::D,
        "v" | "V" => Unknown::V,
        other => return Err(PyValueError::new_err(format!("unknown must be 'd' or 'v', got {other:?}"))),
    };
    let c = c_unknown.unwrap_or(c_v);
    let m = sequence(&m, m_normalization, c)?;
    let d = d.map(|items| sequence(&items, d_normalization, c_v)).transpose()?;
    let known = gram(v, c_v)?;
    let c_unknown = c_unknown.map(rational::parse).transpose().py()?;
    let k = m.len();
    let out = convolution::deconvolve(model, unknown, &m, d.as_ref(), Some(&known), c_unknown.as_ref(), k).py()?;
    values_to_py(py, &out.values)
}

/// `tr(X^2), ..., tr(X^{2k})` for `kind` in {"toeplitz", "hankel"}.
#[pyfunction]
fn ensemble_moments(py: Python<'_>, kind: &str, orders: usize) -> PyResult<Vec<Py<PyAny>>> {
    let kind: EnsembleKind = kind.parse().py()?;
    values_to_py(py, &ensembles::ensemble_moments(kind, orders).py()?.values)
}

#[pyfunction]
fn partition_stats(py: Python<'_>, n: usize) -> PyResult<Py<PyDict>> {
    let s = partition::partition_stats(n).py()?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("partitions", s.partitions)?;
    d.set_item("alternating", s.alternating)?;
    d.set_item("cyclic_classes", s.cyclic_classes)?;
    Ok(d.unbind())
}

/// Empirical normalized traces of `expr`; `sizes` maps `"V1"` to `(N, L)`.
#[pyfunction]
#[pyo3(signature = (expr, sizes, orders=4, trials=20, seed=1, diagonals=None))]
fn simulate_moments(
    py: Python<'_>,
    expr: &str,
    sizes: HashMap<String, (usize, usize)>,
    orders: usize,
    trials: usize,
    seed: u64,
    diagonals: Option<HashMap<String, Vec<f64>>>,
) -> PyResult<Py<PyDict>> {
    let e = parse_expression(expr, &Attributes::default()).py()?;
    let mut b = SimulationBindings::default();
    for (k, (n, l)) in sizes {
        let i = k.strip_prefix('V').and_then(|i| i.parse().ok()).ok_or_else(|| PyValueError::new_err(format!("bad key {k:?}")))?;
        b = b.with_vandermonde(i, n, l, PhaseDensity::Uniform);
    }
    for (k, eig) in diagonals.unwrap_or_default() {
        let i = k.strip_prefix('D').and_then(|i| i.parse().ok()).ok_or_else(|| PyValueError::new_err(format!("bad key {k:?}")))?;
        b = b.with_diagonal(i, eig);
    }
    let r = py.detach(|| simulate::empirical_mixed_moment(&e, &b, orders, trials, seed)).py()?;
    let d = PyDict::new(py);
    d.set_item("orders", r.orders)?;
    d.set_item("mean", r.mean)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("trials", r.trials)?;
    d.set_item("seed", r.seed)?;
    Ok(d.unbind())
}

#[pymodule]
#[pyo3(name = "vandconv")]
fn vandconv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add_function(wrap_pyfunction!(formula, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(convolve, m)?)?;
    m.add_function(wrap_pyfunction!(deconvolve, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_moments, m)?)?;
    m.add_function(wrap_pyfunction!(partition_stats, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_moments, m)?)?;
    Ok(())
}
