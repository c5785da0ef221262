//! Finite-dimensional commutative Frobenius algebras over exact rationals.
//!
//! An algebra is stored as structure constants `c[i][j][k]` with
//! `e_i ∘ e_j = Σ_k c[i][j][k] e_k`, a unit coordinate vector and a trace
//! weight vector `w` with `ω(e_q) = w_q`. Elements are coordinate vectors
//! over a scalar ring, so the same algebra serves exact rationals, jet
//! polynomials and numeric Taylor jets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exact rational scalar used throughout the symbolic layers.
pub type Rat = num_rational::BigRational;

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(p.into())
}

/// Scalar ring interface for algebra coordinates.
///
/// Structure constants are rational, so every coordinate ring must admit
/// multiplication by a `Rat` in addition to its own ring operations.
pub trait Scalar: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, q: &Rat) -> Self;
    fn from_rat(q: &Rat) -> Self;
    fn one() -> Self {
        Self::from_rat(&<Rat as num_traits::One>::one())
    }
}

impl Scalar for Rat {
    fn zero() -> Self {
        <Rat as num_traits::Zero>::zero()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, q: &Rat) -> Self {
        self * q
    }
    fn from_rat(q: &Rat) -> Self {
        q.clone()
    }
}

pub fn rat_to_f64(q: &Rat) -> f64 {
    let n = q.numer();
    let d = q.denom();
    // Good enough for the magnitudes appearing in trace weights and
    // structure constants.
    let nf: f64 = n.to_string().parse().unwrap_or(f64::NAN);
    let df: f64 = d.to_string().parse().unwrap_or(f64::NAN);
    nf / df
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, q: &Rat) -> Self {
        self * rat_to_f64(q)
    }
    fn from_rat(q: &Rat) -> Self {
        rat_to_f64(q)
    }
}

/// Scalar rings with exact division, enough for Gaussian elimination.
pub trait FieldScalar: Scalar {
    fn div(&self, other: &Self) -> Self;
    /// Whether the value is usable as a pivot.
    fn pivot_ok(&self) -> bool;
}

impl FieldScalar for Rat {
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn pivot_ok(&self) -> bool {
        !num_traits::Zero::is_zero(self)
    }
}

impl FieldScalar for f64 {
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn pivot_ok(&self) -> bool {
        self.abs() > 1e-300
    }
}

/// A commutative Frobenius algebra `{A, ∘, e, ω}` given by data.
#[derive(Debug, Clone)]
pub struct FrobeniusAlgebra {
    name: String,
    dim: usize,
    /// Dense `n³` table, `c[(i*n + j)*n + k]`.
    structure: Vec<Rat>,
    unit: Vec<Rat>,
    trace_weights: Vec<Rat>,
    /// Inverse of the Gram matrix `g[i][j] = ω(e_i ∘ e_j)`, row-major.
    gram_inv: Vec<Rat>,
}

pub type AlgebraRef = Arc<FrobeniusAlgebra>;

/// Axiom check report; `None` witnesses mean the axiom holds.
#[derive(Debug, Clone, Serialize)]
pub struct FrobeniusReport {
    pub commutative: Option<(usize, usize, usize)>,
    pub associative: Option<(usize, usize, usize, usize)>,
    pub unital: Option<usize>,
    pub nondegenerate: bool,
}

impl FrobeniusReport {
    pub fn pass(&self) -> bool {
        self.commutative.is_none()
            && self.associative.is_none()
            && self.unital.is_none()
            && self.nondegenerate
    }
}

impl fmt::Display for FrobeniusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.commutative {
            None => writeln!(f, "commutativity: ok")?,
            Some((i, j, k)) => writeln!(f, "commutativity: FAIL at c[{i}][{j}][{k}]")?,
        }
        match &self.associative {
            None => writeln!(f, "associativity: ok")?,
            Some((i, j, k, l)) => writeln!(f, "associativity: FAIL at (i,j,k,l)=({i},{j},{k},{l})")?,
        }
        match &self.unital {
            None => writeln!(f, "unit: ok")?,
            Some(i) => writeln!(f, "unit: FAIL on basis element e_{}", i + 1)?,
        }
        if self.nondegenerate {
            writeln!(f, "nondegeneracy: ok")
        } else {
            writeln!(f, "nondegeneracy: FAIL (singular Gram matrix)")
        }
    }
}

/// Serialized form of an algebra definition file.
#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    name: String,
    dim: usize,
    structure_constants: Vec<Vec<Vec<String>>>,
    unit: Vec<String>,
    trace_weights: Vec<String>,
}

fn parse_rat(s: &str) -> Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|e| Error::BadAlgebraSpec(format!("bad rational '{s}': {e}")))
}

impl FrobeniusAlgebra {
    /// Builds an algebra from raw data. The Frobenius axioms are checked and
    /// a degenerate trace form is rejected.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        structure: Vec<Rat>,
        unit: Vec<Rat>,
        trace_weights: Vec<Rat>,
    ) -> Result<AlgebraRef> {
        let alg = Self::new_unchecked(name, dim, structure, unit, trace_weights)?;
        let report = alg.check();
        if !report.nondegenerate {
            return Err(Error::DegenerateTrace);
        }
        if !report.pass() {
            return Err(Error::BadAlgebraSpec(format!("axiom failure:\n{report}")));
        }
        Ok(alg)
    }

    /// Builds without axiom checks (used by `check_frobenius` tests on
    /// deliberately broken data).
    pub fn new_unchecked(
        name: impl Into<String>,
        dim: usize,
        structure: Vec<Rat>,
        unit: Vec<Rat>,
        trace_weights: Vec<Rat>,
    ) -> Result<AlgebraRef> {
        if dim == 0 || structure.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch {
                got: structure.len(),
                want: dim * dim * dim,
            });
        }
        if unit.len() != dim || trace_weights.len() != dim {
            return Err(Error::DimensionMismatch {
                got: unit.len(),
                want: dim,
            });
        }
        let mut alg = FrobeniusAlgebra {
            name: name.into(),
            dim,
            structure,
            unit,
            trace_weights,
            gram_inv: Vec::new(),
        };
        alg.gram_inv = invert_rat_matrix(&alg.gram_matrix(), dim).unwrap_or_default();
        Ok(Arc::new(alg))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rat {
        &self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn unit_coords(&self) -> &[Rat] {
        &self.unit
    }

    pub fn trace_weights(&self) -> &[Rat] {
        &self.trace_weights
    }

    /// Gram matrix `g[i][j] = ω(e_i ∘ e_j)`, row-major.
    pub fn gram_matrix(&self) -> Vec<Rat> {
        let n = self.dim;
        let mut g = vec![Rat::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Rat::zero();
                for k in 0..n {
                    s += self.structure_constant(i, j, k) * &self.trace_weights[k];
                }
                g[i * n + j] = s;
            }
        }
        g
    }

    /// Solves `g · x = rhs` against the Gram matrix, for any coordinate ring.
    pub fn gram_solve<R: Scalar>(&self, rhs: &[R]) -> Result<Vec<R>> {
        if self.gram_inv.is_empty() {
            return Err(Error::DegenerateTrace);
        }
        let n = self.dim;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { got: rhs.len(), want: n });
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = R::zero();
            for j in 0..n {
                let c = &self.gram_inv[i * n + j];
                if !num_traits::Zero::is_zero(c) {
                    acc = acc.add(&rhs[j].scale(c));
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Checks the four Frobenius axioms, returning witnesses on failure.
    pub fn check(&self) -> FrobeniusReport {
        let n = self.dim;
        let mut commutative = None;
        'comm: for i in 0..n {
            for j in 0..i {
                for k in 0..n {
                    if self.structure_constant(i, j, k) != self.structure_constant(j, i, k) {
                        commutative = Some((i, j, k));
                        break 'comm;
                    }
                }
            }
        }
        let mut associative = None;
        'assoc: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut lhs = Rat::zero();
                        let mut rhs = Rat::zero();
                        for s in 0..n {
                            lhs += self.structure_constant(i, j, s)
                                * self.structure_constant(s, k, l);
                            rhs += self.structure_constant(j, k, s)
                                * self.structure_constant(i, s, l);
                        }
                        if lhs != rhs {
                            associative = Some((i, j, k, l));
                            break 'assoc;
                        }
                    }
                }
            }
        }
        let mut unital = None;
        'unit: for j in 0..n {
            for k in 0..n {
                let mut s = Rat::zero();
                for i in 0..n {
                    s += &self.unit[i] * self.structure_constant(i, j, k);
                }
                let expect = if j == k { Rat::one() } else { Rat::zero() };
                if s != expect {
                    unital = Some(j);
                    break 'unit;
                }
            }
        }
        let nondegenerate = !self.gram_inv.is_empty();
        FrobeniusReport {
            commutative,
            associative,
            unital,
            nondegenerate,
        }
    }

    pub fn to_json(&self) -> String {
        let n = self.dim;
        let sc = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n)
                            .map(|k| self.structure_constant(i, j, k).to_string())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let j = AlgebraJson {
            name: self.name.clone(),
            dim: n,
            structure_constants: sc,
            unit: self.unit.iter().map(|r| r.to_string()).collect(),
            trace_weights: self.trace_weights.iter().map(|r| r.to_string()).collect(),
        };
        serde_json::to_string_pretty(&j).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<AlgebraRef> {
        let j: AlgebraJson =
            serde_json::from_str(text).map_err(|e| Error::BadAlgebraSpec(e.to_string()))?;
        let n = j.dim;
        let mut structure = Vec::with_capacity(n * n * n);
        if j.structure_constants.len() != n {
            return Err(Error::BadAlgebraSpec("structure_constants shape".into()));
        }
        for row in &j.structure_constants {
            if row.len() != n {
                return Err(Error::BadAlgebraSpec("structure_constants shape".into()));
            }
            for col in row {
                if col.len() != n {
                    return Err(Error::BadAlgebraSpec("structure_constants shape".into()));
                }
                for s in col {
                    structure.push(parse_rat(s)?);
                }
            }
        }
        let unit = j.unit.iter().map(|s| parse_rat(s)).collect::<Result<_>>()?;
        let weights = j
            .trace_weights
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<_>>()?;
        FrobeniusAlgebra::new(j.name, n, structure, unit, weights)
    }

    /// Resolves a builtin name: `zn:<n>:<k>`, `z2:<eps>:<mu>:<k>`, `trn:<n>`,
    /// or `scalar` for the one-dimensional algebra.
    pub fn builtin(spec: &str) -> Result<AlgebraRef> {
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["scalar"] => build_zn(1, 0),
            ["zn", n, k] => {
                let n: usize = n.parse().map_err(|_| bad(spec))?;
                let k: usize = k.parse().map_err(|_| bad(spec))?;
                build_zn(n, k)
            }
            ["z2", eps, mu, k] => {
                let eps = parse_rat(eps)?;
                let mu = parse_rat(mu)?;
                let k: usize = k.parse().map_err(|_| bad(spec))?;
                build_z2_eps_mu(&eps, &mu, k)
            }
            ["trn", n] => {
                let n: usize = n.parse().map_err(|_| bad(spec))?;
                build_zn_with_weights(n, trn_weights(n), format!("Z{n}(tr_{n})"))
            }
            _ => Err(bad(spec)),
        }
    }
}

fn bad(spec: &str) -> Error {
    Error::BadAlgebraSpec(spec.to_string())
}

/// Inverts an `n × n` rational matrix; `None` if singular.
pub fn invert_rat_matrix(m: &[Rat], n: usize) -> Option<Vec<Rat>> {
    let mut a: Vec<Rat> = m.to_vec();
    let mut inv = vec![Rat::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = Rat::one();
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r * n + col].is_zero())?;
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let p = a[col * n + col].clone();
        for j in 0..n {
            a[col * n + j] /= &p;
            inv[col * n + j] /= &p;
        }
        for r in 0..n {
            if r != col && !a[r * n + col].is_zero() {
                let f = a[r * n + col].clone();
                for j in 0..n {
                    let av = &a[col * n + j] * &f;
                    a[r * n + j] -= av;
                    let iv = &inv[col * n + j] * &f;
                    inv[r * n + j] -= iv;
                }
            }
        }
    }
    Some(inv)
}

/// Structure constants of the truncated polynomial algebra `Z_n`:
/// `e_i ∘ e_j = e_{i+j−1}` when `i+j ≤ n+1`, zero otherwise (1-based).
fn zn_structure(n: usize) -> Vec<Rat> {
    let mut c = vec![Rat::zero(); n * n * n];
    for i in 0..n {
        for j in 0..n {
            if i + j < n {
                c[(i * n + j) * n + (i + j)] = Rat::one();
            }
        }
    }
    c
}

fn zn_basic_weights(n: usize, k: usize) -> Vec<Rat> {
    // ω_k(a) = a_{k+1} + a_n (1 − δ_{k+1,n}) in 1-based component labels.
    let mut w = vec![Rat::zero(); n];
    w[k] += Rat::one();
    if k + 1 != n {
        w[n - 1] += Rat::one();
    }
    w
}

fn build_zn_with_weights(n: usize, weights: Vec<Rat>, name: String) -> Result<AlgebraRef> {
    let mut unit = vec![Rat::zero(); n];
    unit[0] = Rat::one();
    FrobeniusAlgebra::new(name, n, zn_structure(n), unit, weights)
}

/// The nonsemisimple algebra `Z_{n,k}` with basic trace form `ω_k`.
pub fn build_zn(n: usize, k: usize) -> Result<AlgebraRef> {
    if n == 0 {
        return Err(Error::BadAlgebraSpec("zn: n must be positive".into()));
    }
    if k >= n {
        return Err(Error::BadAlgebraSpec(format!(
            "zn: trace index {k} out of range 0..{}",
            n - 1
        )));
    }
    build_zn_with_weights(n, zn_basic_weights(n, k), format!("Z{n},{k}"))
}

/// Two-dimensional algebra with `e_2 ∘ e_2 = ε e_1 + μ e_2` and trace
/// `ω_k(a) = a_k + a_2 (1 − δ_{k,2}) δ_{ε,0}` for `k ∈ {1, 2}`.
pub fn build_z2_eps_mu(eps: &Rat, mu: &Rat, k: usize) -> Result<AlgebraRef> {
    if k != 1 && k != 2 {
        return Err(Error::BadAlgebraSpec("z2: k must be 1 or 2".into()));
    }
    let n = 2;
    let mut c = vec![Rat::zero(); 8];
    // e1 is the unit.
    c[(0 * n + 0) * n + 0] = Rat::one();
    c[(0 * n + 1) * n + 1] = Rat::one();
    c[(1 * n + 0) * n + 1] = Rat::one();
    c[(1 * n + 1) * n + 0] = eps.clone();
    c[(1 * n + 1) * n + 1] = mu.clone();
    let mut w = vec![Rat::zero(); 2];
    w[k - 1] += Rat::one();
    if k == 1 && eps.is_zero() {
        w[1] += Rat::one();
    }
    FrobeniusAlgebra::new(
        format!("Z2[{eps},{mu}],{k}"),
        2,
        c,
        vec![Rat::one(), Rat::zero()],
        w,
    )
}

/// Weight vector of the trace-type map `tr_n = Σ_s ω_s − (n−1) ω_{n−1}`.
pub fn trn_weights(n: usize) -> Vec<Rat> {
    let mut w = vec![Rat::zero(); n];
    for k in 0..n {
        for (q, v) in zn_basic_weights(n, k).into_iter().enumerate() {
            w[q] += v;
        }
    }
    let last = zn_basic_weights(n, n - 1);
    let f = rat_int(n as i64 - 1);
    for q in 0..n {
        w[q] -= &last[q] * &f;
    }
    w
}

/// A coordinate vector over a scalar ring `R`, tied to its algebra.
#[derive(Debug, Clone)]
pub struct AlgebraElement<R: Scalar> {
    alg: AlgebraRef,
    coords: Vec<R>,
}

impl<R: Scalar> PartialEq for AlgebraElement<R> {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl<R: Scalar> AlgebraElement<R> {
    pub fn new(alg: &AlgebraRef, coords: Vec<R>) -> Result<Self> {
        if coords.len() != alg.dim() {
            return Err(Error::DimensionMismatch {
                got: coords.len(),
                want: alg.dim(),
            });
        }
        Ok(AlgebraElement {
            alg: alg.clone(),
            coords,
        })
    }

    pub fn zero(alg: &AlgebraRef) -> Self {
        AlgebraElement {
            alg: alg.clone(),
            coords: vec![R::zero(); alg.dim()],
        }
    }

    pub fn unit(alg: &AlgebraRef) -> Self {
        AlgebraElement {
            alg: alg.clone(),
            coords: alg.unit.iter().map(|q| R::from_rat(q)).collect(),
        }
    }

    /// Basis element `e_{q+1}` (0-based index).
    pub fn basis(alg: &AlgebraRef, q: usize) -> Self {
        let mut coords = vec![R::zero(); alg.dim()];
        coords[q] = R::one();
        AlgebraElement {
            alg: alg.clone(),
            coords,
        }
    }

    pub fn algebra(&self) -> &AlgebraRef {
        &self.alg
    }

    pub fn coords(&self) -> &[R] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<R> {
        self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.alg, &other.alg) || self.alg.name == other.alg.name {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch(
                self.alg.name.clone(),
                other.alg.name.clone(),
            ))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(self.check_same(other).is_ok());
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert!(self.check_same(other).is_ok());
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self.coords.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn scale(&self, q: &Rat) -> Self {
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self.coords.iter().map(|a| a.scale(q)).collect(),
        }
    }

    pub fn scale_ring(&self, s: &R) -> Self {
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self.coords.iter().map(|a| a.mul(s)).collect(),
        }
    }

    /// Bilinear product via the structure constants.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let n = self.alg.dim();
        let mut coords = vec![R::zero(); n];
        for i in 0..n {
            if self.coords[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if other.coords[j].is_zero() {
                    continue;
                }
                let prod = self.coords[i].mul(&other.coords[j]);
                for k in 0..n {
                    let c = self.alg.structure_constant(i, j, k);
                    if !num_traits::Zero::is_zero(c) {
                        coords[k] = coords[k].add(&prod.scale(c));
                    }
                }
            }
        }
        Ok(AlgebraElement {
            alg: self.alg.clone(),
            coords,
        })
    }

    /// Trace form `ω(a) = Σ_q w_q a_q`.
    pub fn trace(&self) -> R {
        let mut s = R::zero();
        for (a, w) in self.coords.iter().zip(self.alg.trace_weights()) {
            if !num_traits::Zero::is_zero(w) {
                s = s.add(&a.scale(w));
            }
        }
        s
    }

    /// Invariant pairing `⟨a, b⟩ = ω(a ∘ b)`.
    pub fn pair(&self, other: &Self) -> Result<R> {
        Ok(self.mul(other)?.trace())
    }

    pub fn map<S: Scalar>(&self, f: impl Fn(&R) -> S) -> AlgebraElement<S> {
        AlgebraElement {
            alg: self.alg.clone(),
            coords: self.coords.iter().map(f).collect(),
        }
    }
}

impl<R: FieldScalar> AlgebraElement<R> {
    /// Regular representation matrix of `a`: column `j` holds `a ∘ e_j`.
    fn regular_rep(&self) -> Vec<R> {
        let n = self.alg.dim();
        let mut m = vec![R::zero(); n * n];
        for j in 0..n {
            for i in 0..n {
                if self.coords[i].is_zero() {
                    continue;
                }
                for k in 0..n {
                    let c = self.alg.structure_constant(i, j, k);
                    if !num_traits::Zero::is_zero(c) {
                        m[k * n + j] = m[k * n + j].add(&self.coords[i].scale(c));
                    }
                }
            }
        }
        m
    }

    /// Multiplicative inverse via the regular representation.
    pub fn inv(&self) -> Result<Self> {
        let n = self.alg.dim();
        let mut m = self.regular_rep();
        let mut rhs: Vec<R> = self.alg.unit.iter().map(|q| R::from_rat(q)).collect();
        // Gaussian elimination with partial pivoting by `pivot_ok`.
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| m[r * n + col].pivot_ok())
                .ok_or(Error::NotInvertible)?;
            if pivot != col {
                for j in 0..n {
                    m.swap(col * n + j, pivot * n + j);
                }
                rhs.swap(col, pivot);
            }
            let p = m[col * n + col].clone();
            for j in col..n {
                m[col * n + j] = m[col * n + j].div(&p);
            }
            rhs[col] = rhs[col].div(&p);
            for r in 0..n {
                if r != col && !m[r * n + col].is_zero() {
                    let f = m[r * n + col].clone();
                    for j in col..n {
                        let v = m[col * n + j].mul(&f);
                        m[r * n + j] = m[r * n + j].sub(&v);
                    }
                    let v = rhs[col].mul(&f);
                    rhs[r] = rhs[r].sub(&v);
                }
            }
        }
        AlgebraElement::new(&self.alg, rhs)
    }
}

impl AlgebraElement<Rat> {
    /// Splits `a = λ e + N`; returns `(λ, N)` when `N` is nilpotent.
    pub fn nilpotent_split(&self) -> Option<(Rat, AlgebraElement<Rat>)> {
        let n = self.alg.dim();
        // If the regular representation is λI + nilpotent, its matrix trace
        // is n·λ.
        let mut tr = Rat::zero();
        for k in 0..n {
            for i in 0..n {
                tr += &self.coords[i] * self.alg.structure_constant(i, k, k);
            }
        }
        let lambda = tr / rat_int(n as i64);
        let nil = self.sub(&AlgebraElement::unit(&self.alg).scale(&lambda));
        // Nilpotency check: N^n = 0.
        let mut p = nil.clone();
        for _ in 1..n {
            p = p.mul(&nil).ok()?;
        }
        if p.is_zero() {
            Some((lambda, nil))
        } else {
            None
        }
    }

    /// Exact exponential, defined only for nilpotent elements.
    pub fn exp(&self) -> Result<AlgebraElement<Rat>> {
        let (lambda, nil) = self.nilpotent_split().ok_or(Error::NonNilpotentExp)?;
        if !lambda.is_zero() {
            return Err(Error::NonNilpotentExp);
        }
        let n = self.alg.dim();
        let mut acc = AlgebraElement::unit(&self.alg);
        let mut pow = AlgebraElement::unit(&self.alg);
        let mut fact = Rat::one();
        for k in 1..n {
            pow = pow.mul(&nil)?;
            fact *= rat_int(k as i64);
            if pow.is_zero() {
                break;
            }
            acc = acc.add(&pow.scale(&(Rat::one() / &fact)));
        }
        Ok(acc)
    }
}

impl AlgebraElement<f64> {
    /// Numeric exponential. Uses the scalar-plus-nilpotent closed form when
    /// available, otherwise a regular-representation power series with
    /// tolerance 1e-14.
    pub fn exp(&self) -> AlgebraElement<f64> {
        let n = self.alg.dim();
        // Try the nilpotent split numerically.
        let mut tr = 0.0;
        for k in 0..n {
            for i in 0..n {
                tr += self.coords[i] * rat_to_f64(self.alg.structure_constant(i, k, k));
            }
        }
        let lambda = tr / n as f64;
        let nil = self.sub(&AlgebraElement::unit(&self.alg).map(|x: &f64| x * lambda));
        let mut p = nil.clone();
        for _ in 1..n {
            p = p.mul(&nil).expect("same algebra");
        }
        let scale = self.coords.iter().map(|c| c.abs()).fold(1.0, f64::max);
        if p.coords.iter().all(|c| c.abs() <= 1e-12 * scale.powi(n as i32)) {
            // exp(a) = e^λ Σ_{k<n} N^k / k!
            let mut acc = AlgebraElement::unit(&self.alg);
            let mut pow = AlgebraElement::unit(&self.alg);
            let mut fact = 1.0;
            for k in 1..n {
                pow = pow.mul(&nil).expect("same algebra");
                fact *= k as f64;
                let f = 1.0 / fact;
                acc = acc.add(&pow.map(|x: &f64| x * f));
            }
            acc.map(|x: &f64| x * lambda.exp())
        } else {
            // Plain power series, adequate for moderate |a|.
            let mut acc = AlgebraElement::unit(&self.alg);
            let mut term = AlgebraElement::unit(&self.alg);
            for k in 1..200 {
                term = term.mul(self).expect("same algebra");
                let f = 1.0 / k as f64;
                term = term.map(|x: &f64| x * f);
                acc = acc.add(&term);
                if term.coords.iter().all(|c| c.abs() < 1e-14) {
                    break;
                }
            }
            acc
        }
    }
}

impl<R: Scalar + fmt::Display> fmt::Display for AlgebraElement<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (q, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*e{}", c, q + 1)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elem(alg: &AlgebraRef, coords: &[i64]) -> AlgebraElement<Rat> {
        AlgebraElement::new(alg, coords.iter().map(|&c| rat_int(c)).collect()).unwrap()
    }

    #[test]
    fn zn_gram_matrices() {
        // Hand-computed from the ω_k table.
        let a = build_zn(2, 1).unwrap();
        assert_eq!(
            a.gram_matrix(),
            vec![rat_int(0), rat_int(1), rat_int(1), rat_int(0)]
        );
        let b = build_zn(2, 0).unwrap();
        assert_eq!(
            b.gram_matrix(),
            vec![rat_int(1), rat_int(1), rat_int(1), rat_int(0)]
        );
    }

    #[test]
    fn zn_trace_of_top_basis_element() {
        for n in 1..=6 {
            for k in 0..n {
                let alg = build_zn(n, k).unwrap();
                let top = AlgebraElement::<Rat>::basis(&alg, n - 1);
                assert_eq!(top.trace(), Rat::one(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn all_builtins_pass_axioms() {
        for n in 1..=6 {
            for k in 0..n {
                let alg = build_zn(n, k).unwrap();
                assert!(alg.check().pass(), "zn {n} {k}");
            }
        }
        for (e, m, k) in [(0, 0, 1), (0, 0, 2), (1, 0, 1), (1, 2, 2), (2, 3, 1)] {
            let alg = build_z2_eps_mu(&rat_int(e), &rat_int(m), k).unwrap();
            assert!(alg.check().pass(), "z2 {e} {m} {k}");
        }
    }

    #[test]
    fn z2_products_and_traces() {
        let alg = build_z2_eps_mu(&rat_int(3), &rat_int(5), 2).unwrap();
        let e2 = AlgebraElement::<Rat>::basis(&alg, 1);
        let sq = e2.mul(&e2).unwrap();
        assert_eq!(sq.coords(), &[rat_int(3), rat_int(5)]);
        // ω_2(a) = a_2
        let a = elem(&alg, &[7, 11]);
        assert_eq!(a.trace(), rat_int(11));
    }

    #[test]
    fn z2_eps1_mu0_k1_gram_is_identity() {
        let alg = build_z2_eps_mu(&rat_int(1), &rat_int(0), 1).unwrap();
        assert_eq!(
            alg.gram_matrix(),
            vec![rat_int(1), rat_int(0), rat_int(0), rat_int(1)]
        );
    }

    #[test]
    fn z3_truncation_product() {
        let alg = build_zn(3, 0).unwrap();
        let e2 = AlgebraElement::<Rat>::basis(&alg, 1);
        let e3 = AlgebraElement::<Rat>::basis(&alg, 2);
        assert!(e2.mul(&e3).unwrap().is_zero());
        assert_eq!(e2.mul(&e2).unwrap(), e3);
    }

    #[test]
    fn unit_acts_trivially() {
        let alg = build_zn(4, 2).unwrap();
        let u = AlgebraElement::<Rat>::unit(&alg);
        let a = elem(&alg, &[3, -1, 2, 7]);
        assert_eq!(u.mul(&a).unwrap(), a);
    }

    /// Trace of the upper-triangular matrix from the regular representation,
    /// the defining form of `tr_n`.
    fn trn_oracle(n: usize, coords: &[Rat]) -> Rat {
        // T[i][i+d] = 1/(n-d); A = regular representation of a in the Λ basis:
        // A[r][c] = coords[r-c] for r >= c.
        let mut s = Rat::zero();
        for r in 0..n {
            for c in 0..n {
                // (T A)[r][r] = Σ_c T[r][c] A[c][r]; A[c][r] = coords[c-r] if c >= r.
                if c >= r {
                    let t = Rat::new(1.into(), ((n - (c - r)) as i64).into());
                    s += t * &coords[c - r];
                }
            }
        }
        s
    }

    #[test]
    fn trn_weights_match_matrix_trace_oracle() {
        for n in 1..=6 {
            let w = trn_weights(n);
            for q in 0..n {
                let mut coords = vec![Rat::zero(); n];
                coords[q] = Rat::one();
                assert_eq!(w[q], trn_oracle(n, &coords), "n={n} q={q}");
            }
        }
        // tr_2(a) = a_1 + a_2
        assert_eq!(trn_weights(2), vec![rat_int(1), rat_int(1)]);
        // tr_1 = ω_0
        assert_eq!(trn_weights(1), zn_basic_weights(1, 0));
    }

    #[test]
    fn inv_and_exp_on_z2() {
        let alg = build_zn(2, 1).unwrap();
        let a = elem(&alg, &[1, 1]);
        let inv = a.inv().unwrap();
        assert_eq!(inv, elem(&alg, &[1, -1]));
        assert_eq!(a.mul(&inv).unwrap(), AlgebraElement::unit(&alg));

        let b = elem(&alg, &[0, 5]);
        assert_eq!(b.exp().unwrap(), elem(&alg, &[1, 5]));
        assert!(elem(&alg, &[2, 0]).exp().is_err());
        let u = AlgebraElement::<Rat>::unit(&alg);
        assert_eq!(u.inv().unwrap(), u);
    }

    #[test]
    fn pairing_symmetry_and_invariance() {
        let alg = build_zn(3, 1).unwrap();
        let a = elem(&alg, &[1, 2, 3]);
        let b = elem(&alg, &[-4, 0, 5]);
        let c = elem(&alg, &[2, 2, -1]);
        assert_eq!(a.pair(&b).unwrap(), b.pair(&a).unwrap());
        let ab_c = a.mul(&b).unwrap().pair(&c).unwrap();
        let a_bc = a.pair(&b.mul(&c).unwrap()).unwrap();
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn broken_algebras_report_witnesses() {
        // Zero trace weights: Gram is singular.
        let mut unit = vec![Rat::zero(); 2];
        unit[0] = Rat::one();
        let alg = FrobeniusAlgebra::new_unchecked(
            "bad",
            2,
            zn_structure(2),
            unit.clone(),
            vec![Rat::zero(), Rat::zero()],
        )
        .unwrap();
        let rep = alg.check();
        assert!(!rep.nondegenerate);
        assert!(rep.commutative.is_none());

        // Broken commutativity: c[0][1][*] != c[1][0][*].
        let mut c = zn_structure(2);
        c[(0 * 2 + 1) * 2 + 1] = rat_int(2);
        let alg = FrobeniusAlgebra::new_unchecked(
            "bad2",
            2,
            c,
            unit,
            vec![Rat::one(), Rat::one()],
        )
        .unwrap();
        assert!(alg.check().commutative.is_some());
    }

    #[test]
    fn degenerate_z2_trace_rejected() {
        // ε=0, k=1, μ=1 gives Gram [[1,1],[1,1]].
        let err = build_z2_eps_mu(&rat_int(0), &rat_int(1), 1);
        assert!(matches!(err, Err(Error::DegenerateTrace)));
    }

    #[test]
    fn eps_zero_matches_zn2_products() {
        let z2 = build_z2_eps_mu(&rat_int(0), &rat_int(0), 2).unwrap();
        let zn = build_zn(2, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(
                        z2.structure_constant(i, j, k),
                        zn.structure_constant(i, j, k)
                    );
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let alg = build_z2_eps_mu(&rat(1, 2), &rat_int(3), 2).unwrap();
        let text = alg.to_json();
        let back = FrobeniusAlgebra::from_json(&text).unwrap();
        assert_eq!(back.gram_matrix(), alg.gram_matrix());
        assert_eq!(back.dim(), 2);
    }

    #[test]
    fn builtin_specs() {
        assert!(FrobeniusAlgebra::builtin("zn:3:1").is_ok());
        assert!(FrobeniusAlgebra::builtin("z2:1:0:1").is_ok());
        assert!(FrobeniusAlgebra::builtin("trn:4").is_ok());
        assert!(FrobeniusAlgebra::builtin("zn:3:7").is_err());
        assert!(FrobeniusAlgebra::builtin("nope").is_err());
    }
}
