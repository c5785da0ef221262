//! Python bindings for the frobkp library: algebra construction, hierarchy
//! derivations, Hamiltonian verification drivers and the soliton evaluator.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use frobkp::frobenius::{AlgebraElement, AlgebraRef, FrobeniusAlgebra, Rat};
use frobkp::jet::field_element;
use frobkp::psido::GradOperator;
use frobkp::report::Report;
use frobkp::{dkp, hamiltonian, hierarchy, soliton};

fn to_py(e: frobkp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rat(text: &str) -> PyResult<Rat> {
    text.trim()
        .parse::<Rat>()
        .map_err(|e| PyValueError::new_err(format!("bad rational `{text}`: {e}")))
}

fn parse_vec(alg: &AlgebraRef, coords: Vec<String>) -> PyResult<AlgebraElement<Rat>> {
    let v = coords
        .iter()
        .map(|s| parse_rat(s))
        .collect::<PyResult<Vec<_>>>()?;
    AlgebraElement::new(alg, v).map_err(to_py)
}

/// A finite-dimensional Frobenius algebra over the rationals.
#[pyclass(name = "Algebra", skip_from_py_object)]
#[derive(Clone)]
struct PyAlgebra {
    inner: AlgebraRef,
}

#[pymethods]
impl PyAlgebra {
    /// Builds one of the built-in families from a spec string such as
    /// `"zn:2:1"`, `"z2:1:0:1"`, `"trn:3"` or `"scalar"`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyAlgebra {
            inner: FrobeniusAlgebra::builtin(spec).map_err(to_py)?,
        })
    }

    /// Loads an algebra from its JSON description.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyAlgebra {
            inner: FrobeniusAlgebra::from_json(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn trace_weights(&self) -> Vec<String> {
        self.inner
            .trace_weights()
            .iter()
            .map(|w| w.to_string())
            .collect()
    }

    #[getter]
    fn unit(&self) -> Vec<String> {
        self.inner
            .unit_coords()
            .iter()
            .map(|w| w.to_string())
            .collect()
    }

    /// Gram matrix of the trace form, row major, as rational strings.
    fn gram(&self) -> Vec<Vec<String>> {
        let n = self.inner.dim();
        let g = self.inner.gram_matrix();
        (0..n)
            .map(|i| (0..n).map(|j| g[i * n + j].to_string()).collect())
            .collect()
    }

    /// Product of two elements given by rational coordinate strings.
    fn multiply(&self, a: Vec<String>, b: Vec<String>) -> PyResult<Vec<String>> {
        let x = parse_vec(&self.inner, a)?;
        let y = parse_vec(&self.inner, b)?;
        Ok(x.mul(&y)
            .map_err(to_py)?
            .coords()
            .iter()
            .map(|c| c.to_string())
            .collect())
    }

    /// Trace of an element given by rational coordinate strings.
    fn trace(&self, a: Vec<String>) -> PyResult<String> {
        Ok(parse_vec(&self.inner, a)?.trace().to_string())
    }

    /// Runs the axiom checker (associativity, unit, invariance,
    /// non-degeneracy, commutativity).
    fn check(&self) -> bool {
        self.inner.check().pass()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Algebra({}, dim={})", self.inner.name(), self.inner.dim())
    }
}

/// Text rendering of the r-th flow of the full hierarchy at the given depth.
#[pyfunction]
#[pyo3(signature = (alg, r, depth = 6, latex = false))]
fn kp_flow(alg: &PyAlgebra, r: u32, depth: i64, latex: bool) -> PyResult<String> {
    let l = hierarchy::generic_l(&alg.inner, depth, false);
    let flow = hierarchy::flow_equations(&l, r).map_err(to_py)?;
    Ok(hierarchy::render_flow(&flow, latex))
}

/// Text rendering of the r-th flow of the order-m reduced hierarchy.
#[pyfunction]
#[pyo3(signature = (alg, m, r, latex = false))]
fn gd_flow(alg: &PyAlgebra, m: u32, r: u32, latex: bool) -> PyResult<String> {
    let (flow, _) = hierarchy::gd_flow(&alg.inner, m, r, false).map_err(to_py)?;
    Ok(hierarchy::render_flow(&flow, latex))
}

/// Components of the two-dimensional master equation for this algebra.
#[pyfunction]
fn kp_equation(alg: &PyAlgebra) -> Vec<String> {
    hierarchy::kp_equation(&alg.inner)
        .components
        .iter()
        .map(|p| p.to_string())
        .collect()
}

/// Checks that the t2/t3 flows combine into the master equation.
#[pyfunction]
#[pyo3(signature = (alg, depth = 5))]
fn verify_kp(alg: &PyAlgebra, depth: i64) -> PyResult<bool> {
    hierarchy::verify_kp_identity(&alg.inner, depth).map_err(to_py)
}

/// Compatibility of the r-th and l-th flows on the generic operator.
#[pyfunction]
#[pyo3(signature = (alg, r, l, depth = 6))]
fn zero_curvature(alg: &PyAlgebra, r: u32, l: u32, depth: i64) -> PyResult<bool> {
    let lax = hierarchy::generic_l(&alg.inner, depth, false);
    hierarchy::zero_curvature_check(&lax, r, l).map_err(to_py)
}

/// True when the (m=2, r=3) reduction reproduces the coupled KdV system.
#[pyfunction]
fn verify_ckdv(alg: &PyAlgebra) -> PyResult<bool> {
    Ok(hierarchy::ckdv_residual(&alg.inner)
        .map_err(to_py)?
        .iter()
        .all(|p| p.is_zero()))
}

/// Runs the bi-Hamiltonian identity check and returns (pass, json report).
#[pyfunction]
fn verify_bihamiltonian(alg: &PyAlgebra, m: u32, r: u32) -> PyResult<(bool, String)> {
    let rep = hamiltonian::verify_bihamiltonian(&alg.inner, m, r).map_err(to_py)?;
    Ok((rep.pass, Report::from(&rep).to_json()))
}

/// True when the direct constraint solve for the completed gradient agrees
/// with the closed-form expression for the top component.
#[pyfunction]
fn verify_dirac(alg: &PyAlgebra, m: u32) -> PyResult<bool> {
    let lcal = hierarchy::gd_operator(&alg.inner, m, false);
    let mut comps = BTreeMap::new();
    for i in 0..(m as i64 - 1) {
        comps.insert(i, field_element(&alg.inner, &format!("X{i}")));
    }
    let x = GradOperator::new(&alg.inner, comps);
    Ok(hamiltonian::dirac_complete(&x, &lcal, m).is_ok())
}

/// The three bracket relations of the order-3 W-structure as
/// (name, computed density, printed density, pass) tuples.
#[pyfunction]
fn walgebra(alg: &PyAlgebra) -> PyResult<Vec<(String, String, String, bool)>> {
    Ok(hamiltonian::walgebra_boussinesq(&alg.inner)
        .map_err(to_py)?
        .into_iter()
        .map(|r| {
            (
                r.name,
                r.computed.density().to_string(),
                r.printed.density().to_string(),
                r.pass,
            )
        })
        .collect())
}

/// Named checks that the symbol-calculus structures are the leading-order
/// part of the operator-calculus ones.
#[pyfunction]
fn dkp_limit(alg: &PyAlgebra, m: u32) -> PyResult<Vec<(String, bool)>> {
    dkp::dispersionless_limit_check(&alg.inner, m).map_err(to_py)
}

/// Evaluates the two-parameter soliton on an n×n grid of [lo, hi]² and
/// returns rows (x, t, u components, residual components).
#[pyfunction]
#[pyo3(signature = (alg, a, b, lo, hi, n, order = 5))]
fn soliton_grid(
    alg: &PyAlgebra,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    n: usize,
    order: usize,
) -> PyResult<Vec<(f64, f64, Vec<f64>, Vec<f64>)>> {
    if alg.inner.dim() != 2 {
        return Err(PyValueError::new_err("soliton generator needs dim 2"));
    }
    let gen = soliton::NumEl::new(&alg.inner, vec![a, b]).map_err(to_py)?;
    let tau = soliton::TauFunction::new(gen);
    let grid = soliton::square_grid(lo, hi, n);
    Ok(soliton::kdv_grid(&tau, &grid, order)
        .map_err(to_py)?
        .into_iter()
        .map(|row| (row.x, row.t, row.u, row.residual))
        .collect())
}

/// Largest residual of the evolution equation over the soliton grid.
#[pyfunction]
#[pyo3(signature = (alg, a, b, lo, hi, n, order = 5))]
fn soliton_max_residual(
    alg: &PyAlgebra,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    n: usize,
    order: usize,
) -> PyResult<f64> {
    let rows = soliton_grid(alg, a, b, lo, hi, n, order)?;
    Ok(rows
        .iter()
        .flat_map(|r| r.3.iter().map(|v| v.abs()))
        .fold(0.0_f64, f64::max))
}

#[pymodule]
fn frobkp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_function(wrap_pyfunction!(kp_flow, m)?)?;
    m.add_function(wrap_pyfunction!(gd_flow, m)?)?;
    m.add_function(wrap_pyfunction!(kp_equation, m)?)?;
    m.add_function(wrap_pyfunction!(verify_kp, m)?)?;
    m.add_function(wrap_pyfunction!(zero_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(verify_ckdv, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bihamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(verify_dirac, m)?)?;
    m.add_function(wrap_pyfunction!(walgebra, m)?)?;
    m.add_function(wrap_pyfunction!(dkp_limit, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_grid, m)?)?;
    m.add_function(wrap_pyfunction!(soliton_max_residual, m)?)?;
    Ok(())
}
