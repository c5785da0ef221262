//! Differential polynomials in jet variables with exact rational coefficients.
//!
//! A jet variable is a field component together with an x-derivative order;
//! polynomials in jets carry the total derivative, the Euler (variational)
//! operator, substitution of evolution rules, and an exact inverse of the
//! total derivative used by the Dirac completion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::frobenius::{AlgebraElement, AlgebraRef, Rat, Scalar};
use crate::{Error, Result};

/// A single jet symbol: component `q` of field `label`, differentiated
/// `order` times in x.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub label: String,
    /// Algebra basis index, 0-based.
    pub q: usize,
    pub order: u32,
}

impl JetVar {
    pub fn new(label: impl Into<String>, q: usize, order: u32) -> Self {
        JetVar {
            label: label.into(),
            q,
            order,
        }
    }

    fn raised(&self) -> JetVar {
        JetVar {
            label: self.label.clone(),
            q: self.q,
            order: self.order + 1,
        }
    }

    fn lowered(&self) -> JetVar {
        JetVar {
            label: self.label.clone(),
            q: self.q,
            order: self.order - 1,
        }
    }

    fn ascii(&self) -> String {
        let mut s = format!("{}[{}]", self.label, self.q + 1);
        match self.order {
            0 => {}
            1..=3 => s.push_str(&"'".repeat(self.order as usize)),
            j => s.push_str(&format!("^({j})")),
        }
        s
    }

    fn latex(&self) -> String {
        if self.order == 0 {
            format!("{}_{{[{}]}}", self.label, self.q + 1)
        } else {
            format!("{}_{{[{}]}}^{{({})}}", self.label, self.q + 1, self.order)
        }
    }
}

/// Power product of jet variables; exponents are positive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial(BTreeMap<JetVar, u32>);

impl Monomial {
    fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    fn var(v: JetVar) -> Self {
        let mut m = BTreeMap::new();
        m.insert(v, 1);
        Monomial(m)
    }

    #[allow(dead_code)]
    fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    fn with_exponent(&self, v: &JetVar, e: u32) -> Self {
        let mut m = self.0.clone();
        if e == 0 {
            m.remove(v);
        } else {
            m.insert(v.clone(), e);
        }
        Monomial(m)
    }

    #[allow(dead_code)]
    fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    /// (variable, exponent) pairs of the power product.
    pub fn factors(&self) -> impl Iterator<Item = (&JetVar, u32)> {
        self.0.iter().map(|(v, &e)| (v, e))
    }
}

/// Differential polynomial: canonical map monomial → rational coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JetPoly(BTreeMap<Monomial, Rat>);

fn insert_term(map: &mut BTreeMap<Monomial, Rat>, m: Monomial, c: Rat) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match map.entry(m) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            let s = e.get().add(&c);
            if s.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = s;
            }
        }
    }
}

impl JetPoly {
    pub fn zero() -> Self {
        JetPoly(BTreeMap::new())
    }

    pub fn constant(c: Rat) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Monomial::one(), c);
        }
        JetPoly(m)
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn var(label: impl Into<String>, q: usize, order: u32) -> Self {
        let mut m = BTreeMap::new();
        m.insert(Monomial::var(JetVar::new(label, q, order)), Rat::one());
        JetPoly(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_term(m: Monomial, c: Rat) -> Self {
        let mut map = BTreeMap::new();
        insert_term(&mut map, m, c);
        JetPoly(map)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.0.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    /// The constant (jet-free) coefficient.
    pub fn constant_term(&self) -> Rat {
        self.0.get(&Monomial::one()).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (mono, c) in &other.0 {
            insert_term(&mut m, mono.clone(), c.clone());
        }
        JetPoly(m)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (mono, c) in &other.0 {
            insert_term(&mut m, mono.clone(), c.neg());
        }
        JetPoly(m)
    }

    pub fn neg(&self) -> Self {
        JetPoly(self.0.iter().map(|(m, c)| (m.clone(), c.neg())).collect())
    }

    pub fn scale(&self, q: &Rat) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        JetPoly(self.0.iter().map(|(m, c)| (m.clone(), c.mul(q))).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                insert_term(&mut out, ma.mul(mb), ca.mul(cb));
            }
        }
        JetPoly(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Total x-derivative (derivation shifting each jet order up by one).
    pub fn total_x(&self) -> Self {
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            for (v, &e) in &m.0 {
                let base = m.with_exponent(v, e - 1);
                let mono = base.mul(&Monomial::var(v.raised()));
                insert_term(&mut out, mono, c.scale(&crate::frobenius::rat_int(e as i64)));
            }
        }
        JetPoly(out)
    }

    pub fn total_x_n(&self, n: u32) -> Self {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.total_x();
        }
        p
    }

    /// Partial derivative with respect to one jet symbol.
    pub fn partial(&self, v: &JetVar) -> Self {
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            if let Some(&e) = m.0.get(v) {
                let base = m.with_exponent(v, e - 1);
                insert_term(&mut out, base, c.scale(&crate::frobenius::rat_int(e as i64)));
            }
        }
        JetPoly(out)
    }

    /// All jet symbols appearing.
    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        let mut s = BTreeSet::new();
        for m in self.0.keys() {
            s.extend(m.0.keys().cloned());
        }
        s
    }

    /// All (label, component) pairs appearing.
    pub fn fields(&self) -> BTreeSet<(String, usize)> {
        self.jet_vars()
            .into_iter()
            .map(|v| (v.label, v.q))
            .collect()
    }

    pub fn max_order(&self, label: &str, q: usize) -> Option<u32> {
        self.jet_vars()
            .into_iter()
            .filter(|v| v.label == label && v.q == q)
            .map(|v| v.order)
            .max()
    }

    /// Variational derivative `δp/δv_q = Σ_j (−∂)^j ∂p/∂v_q^{(j)}`.
    pub fn euler(&self, label: &str, q: usize) -> Self {
        let Some(top) = self.max_order(label, q) else {
            return Self::zero();
        };
        let mut acc = Self::zero();
        for j in 0..=top {
            let mut term = self.partial(&JetVar::new(label, q, j)).total_x_n(j);
            if j % 2 == 1 {
                term = term.neg();
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Replaces every jet of `(label, q)` by the matching total derivative of
    /// `repl`.
    pub fn substitute(&self, label: &str, q: usize, repl: &JetPoly) -> Self {
        let top = match self.max_order(label, q) {
            Some(t) => t,
            None => return self.clone(),
        };
        let mut dx: Vec<JetPoly> = Vec::with_capacity(top as usize + 1);
        dx.push(repl.clone());
        for j in 1..=top {
            dx.push(dx[(j - 1) as usize].total_x());
        }
        let mut out = Self::zero();
        for (m, c) in &self.0 {
            let mut factor = Self::constant(c.clone());
            let mut kept = BTreeMap::new();
            for (v, &e) in &m.0 {
                if v.label == label && v.q == q {
                    factor = factor.mul(&dx[v.order as usize].pow(e));
                } else {
                    kept.insert(v.clone(), e);
                }
            }
            let mut kept_poly = BTreeMap::new();
            kept_poly.insert(Monomial(kept), Rat::one());
            out = out.add(&factor.mul(&JetPoly(kept_poly)));
        }
        out
    }

    /// Applies an evolution derivation: `d/dt p = Σ ∂p/∂v^{(j)} · ∂^j(rule)`.
    ///
    /// Every field appearing in `p` must have a rule unless listed in
    /// `frozen` (test functions and other t-independent symbols).
    pub fn differentiate_by_flow(
        &self,
        rules: &BTreeMap<(String, usize), JetPoly>,
        frozen: &dyn Fn(&str) -> bool,
    ) -> Result<Self> {
        let mut cache: BTreeMap<(String, usize, u32), JetPoly> = BTreeMap::new();
        let mut out = Self::zero();
        for v in self.jet_vars() {
            if frozen(&v.label) {
                continue;
            }
            let key = (v.label.clone(), v.q, v.order);
            if !cache.contains_key(&key) {
                let rule = rules
                    .get(&(v.label.clone(), v.q))
                    .ok_or_else(|| Error::MissingFlowRule(v.label.clone(), v.q as u8))?;
                cache.insert(key.clone(), rule.total_x_n(v.order));
            }
            out = out.add(&self.partial(&v).mul(&cache[&key]));
        }
        Ok(out)
    }

    /// Exact inverse of `total_x`, when one exists.
    ///
    /// Solves `total_x(F) = p` by linear algebra over a candidate monomial
    /// basis generated from `p` (each monomial with one derivative order
    /// lowered), extended once if the first basis is insufficient.
    pub fn integrate_total_x(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        if self.0.contains_key(&Monomial::one()) {
            return Err(Error::NotExactDerivative);
        }
        let mut cands = lowered_monomials(self);
        for _round in 0..3 {
            if let Some(f) = solve_total_x(&cands, self) {
                return Ok(f);
            }
            let mut ext = cands.clone();
            for c in &cands {
                let mut single = BTreeMap::new();
                single.insert(c.clone(), Rat::one());
                let img = JetPoly(single).total_x();
                ext.append(&mut lowered_monomials(&img));
            }
            if ext.len() == cands.len() {
                break;
            }
            cands = ext;
        }
        Err(Error::NotExactDerivative)
    }

    pub fn ascii(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.0.iter().enumerate() {
            let (sign, mag) = if c < &Rat::zero() {
                ("-", c.neg())
            } else {
                ("+", c.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push_str("-");
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            let factors: Vec<String> = m
                .0
                .iter()
                .map(|(v, &e)| {
                    if e == 1 {
                        v.ascii()
                    } else {
                        format!("{}^{e}", v.ascii())
                    }
                })
                .collect();
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else if mag == Rat::one() {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format!("{mag}*{}", factors.join("*")));
            }
        }
        out
    }

    pub fn latex(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.0.iter().enumerate() {
            let (sign, mag) = if c < &Rat::zero() {
                ("-", c.neg())
            } else {
                ("+", c.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(&format!(" {sign} "));
            }
            let coeff = if mag.denom() == &num_bigint::BigInt::from(1) {
                mag.numer().to_string()
            } else {
                format!("\\tfrac{{{}}}{{{}}}", mag.numer(), mag.denom())
            };
            let factors: Vec<String> = m
                .0
                .iter()
                .map(|(v, &e)| {
                    if e == 1 {
                        v.latex()
                    } else {
                        format!("({})^{{{e}}}", v.latex())
                    }
                })
                .collect();
            if factors.is_empty() {
                out.push_str(&coeff);
            } else if mag == Rat::one() {
                out.push_str(&factors.join(" "));
            } else {
                out.push_str(&format!("{coeff} {}", factors.join(" ")));
            }
        }
        out
    }
}

fn lowered_monomials(p: &JetPoly) -> BTreeSet<Monomial> {
    let mut set = BTreeSet::new();
    for (m, _) in p.terms() {
        for (v, &e) in &m.0 {
            if v.order >= 1 {
                let base = m.with_exponent(v, e - 1);
                set.insert(base.mul(&Monomial::var(v.lowered())));
            }
        }
    }
    set
}

/// Solves `total_x(Σ a_i c_i) = p` exactly over the candidate monomials;
/// `None` if inconsistent.
fn solve_total_x(cands: &BTreeSet<Monomial>, p: &JetPoly) -> Option<JetPoly> {
    let cands: Vec<&Monomial> = cands.iter().collect();
    // Images of each candidate under total_x.
    let images: Vec<JetPoly> = cands
        .iter()
        .map(|m| {
            let mut single = BTreeMap::new();
            single.insert((*m).clone(), Rat::one());
            JetPoly(single).total_x()
        })
        .collect();
    // Row space: all monomials appearing in images or p.
    let mut rows: BTreeSet<Monomial> = p.0.keys().cloned().collect();
    for img in &images {
        rows.extend(img.0.keys().cloned());
    }
    let rows: Vec<&Monomial> = rows.iter().collect();
    let ncols = cands.len();
    let nrows = rows.len();
    let mut a = vec![Rat::zero(); nrows * (ncols + 1)];
    for (r, mono) in rows.iter().enumerate() {
        for (cix, img) in images.iter().enumerate() {
            if let Some(v) = img.0.get(*mono) {
                a[r * (ncols + 1) + cix] = v.clone();
            }
        }
        if let Some(v) = p.0.get(*mono) {
            a[r * (ncols + 1) + ncols] = v.clone();
        }
    }
    // Gaussian elimination on the augmented matrix.
    let w = ncols + 1;
    let mut pivot_col_of_row = vec![usize::MAX; nrows];
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pr) = (rank..nrows).find(|&r| !a[r * w + col].is_zero()) else {
            continue;
        };
        for j in 0..w {
            a.swap(rank * w + j, pr * w + j);
        }
        let piv = a[rank * w + col].clone();
        for j in col..w {
            a[rank * w + j] /= &piv;
        }
        for r in 0..nrows {
            if r != rank && !a[r * w + col].is_zero() {
                let f = a[r * w + col].clone();
                for j in col..w {
                    let v = a[rank * w + j].clone() * &f;
                    a[r * w + j] -= v;
                }
            }
        }
        pivot_col_of_row[rank] = col;
        rank += 1;
    }
    // Inconsistent if any zero row has nonzero rhs.
    for r in rank..nrows {
        if !a[r * w + ncols].is_zero() {
            return None;
        }
    }
    let mut coeffs = vec![Rat::zero(); ncols];
    for r in 0..rank {
        coeffs[pivot_col_of_row[r]] = a[r * w + ncols].clone();
    }
    let mut out = BTreeMap::new();
    for (cix, m) in cands.iter().enumerate() {
        insert_term(&mut out, (*m).clone(), coeffs[cix].clone());
    }
    let f = JetPoly(out);
    // The candidate basis may not span a solution even when consistent in
    // rank terms; confirm by substitution.
    if f.total_x() == *p {
        Some(f)
    } else {
        None
    }
}

impl Scalar for JetPoly {
    fn zero() -> Self {
        JetPoly::zero()
    }
    fn is_zero(&self) -> bool {
        JetPoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        JetPoly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        JetPoly::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        JetPoly::mul(self, other)
    }
    fn neg(&self) -> Self {
        JetPoly::neg(self)
    }
    fn scale(&self, q: &Rat) -> Self {
        JetPoly::scale(self, q)
    }
    fn from_rat(q: &Rat) -> Self {
        JetPoly::constant(q.clone())
    }
}

impl fmt::Display for JetPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ascii())
    }
}

/// A density considered modulo total x-derivatives (and additive constants).
#[derive(Debug, Clone)]
pub struct Functional {
    density: JetPoly,
}

impl Functional {
    pub fn new(density: JetPoly) -> Self {
        Functional { density }
    }

    pub fn zero() -> Self {
        Functional {
            density: JetPoly::zero(),
        }
    }

    pub fn density(&self) -> &JetPoly {
        &self.density
    }

    pub fn add(&self, other: &Self) -> Self {
        Functional::new(self.density.add(&other.density))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Functional::new(self.density.sub(&other.density))
    }

    pub fn neg(&self) -> Self {
        Functional::new(self.density.neg())
    }

    pub fn scale(&self, q: &Rat) -> Self {
        Functional::new(self.density.scale(q))
    }

    /// True when the density is a total derivative plus a constant.
    pub fn is_zero(&self) -> bool {
        let d = &self.density;
        d.fields()
            .into_iter()
            .all(|(label, q)| d.euler(&label, q).is_zero())
    }
}

impl PartialEq for Functional {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

/// An algebra-valued field symbol: component `q` is the jet variable
/// `label[q]` of order 0.
pub fn field_element(alg: &AlgebraRef, label: &str) -> AlgebraElement<JetPoly> {
    let coords = (0..alg.dim()).map(|q| JetPoly::var(label, q, 0)).collect();
    AlgebraElement::new(alg, coords).expect("length matches dim")
}

/// Componentwise total derivative of an algebra-valued differential
/// polynomial vector.
pub fn element_total_x(a: &AlgebraElement<JetPoly>) -> AlgebraElement<JetPoly> {
    a.map(|p| p.total_x())
}

pub fn element_total_x_n(a: &AlgebraElement<JetPoly>, n: u32) -> AlgebraElement<JetPoly> {
    a.map(|p| p.total_x_n(n))
}

/// The algebra-valued gradient `G` of `h = ∫ density dx` with respect to the
/// field `label`, defined by `tr(G ∘ δV) = Σ_q (δh/δv_q) δv_q`: the Gram
/// system solved against the componentwise Euler derivatives.
pub fn variational_gradient(
    alg: &AlgebraRef,
    density: &JetPoly,
    label: &str,
) -> Result<AlgebraElement<JetPoly>> {
    let rhs: Vec<JetPoly> = (0..alg.dim()).map(|q| density.euler(label, q)).collect();
    let coords = alg.gram_solve(&rhs)?;
    AlgebraElement::new(alg, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{build_zn, rat, rat_int};

    fn v(order: u32) -> JetPoly {
        JetPoly::var("v", 0, order)
    }

    fn w(order: u32) -> JetPoly {
        JetPoly::var("w", 0, order)
    }

    #[test]
    fn total_x_basics() {
        assert_eq!(v(0).total_x(), v(1));
        // Leibniz on a product
        let p = v(0).mul(&w(0));
        assert_eq!(p.total_x(), v(1).mul(&w(0)).add(&v(0).mul(&w(1))));
        assert!(JetPoly::constant(rat_int(7)).total_x().is_zero());
        // power rule
        let sq = v(0).mul(&v(0));
        assert_eq!(sq.total_x(), v(0).mul(&v(1)).scale(&rat_int(2)));
    }

    #[test]
    fn euler_kills_total_derivatives() {
        // v v' = (v²/2)'
        assert!(v(0).mul(&v(1)).euler("v", 0).is_zero());
        assert!(v(2).euler("v", 0).is_zero());
        let p = v(0).mul(&w(1)).add(&v(1).mul(&w(0)));
        assert!(p.euler("v", 0).is_zero());
        assert!(p.euler("w", 0).is_zero());
    }

    #[test]
    fn euler_of_cubic_density() {
        // δ/δv (3/2 v²w + 1/4 v w'') = 3vw + 1/4 w''
        let h = v(0)
            .mul(&v(0))
            .mul(&w(0))
            .scale(&rat(3, 2))
            .add(&v(0).mul(&w(2)).scale(&rat(1, 4)));
        let dv = h.euler("v", 0);
        let expect = v(0)
            .mul(&w(0))
            .scale(&rat_int(3))
            .add(&w(2).scale(&rat(1, 4)));
        assert_eq!(dv, expect);
        // δ/δw of the same density: 3/2 v² + 1/4 v''
        let dw = h.euler("w", 0);
        let expect_w = v(0)
            .mul(&v(0))
            .scale(&rat(3, 2))
            .add(&v(2).scale(&rat(1, 4)));
        assert_eq!(dw, expect_w);
    }

    #[test]
    fn functional_equality() {
        let f = Functional::new(v(0).mul(&v(1)));
        assert_eq!(f, Functional::zero());
        // ∫ v w'' = ∫ v'' w
        let a = Functional::new(v(0).mul(&w(2)));
        let b = Functional::new(v(2).mul(&w(0)));
        assert_eq!(a, b);
        let c = Functional::new(v(0).mul(&v(0)));
        assert_ne!(c, Functional::zero());
    }

    #[test]
    fn substitution_follows_chain_rule() {
        // substitute v := w² into v' gives 2 w w'
        let p = v(1).substitute("v", 0, &w(0).mul(&w(0)));
        assert_eq!(p, w(0).mul(&w(1)).scale(&rat_int(2)));
        let q = v(0).mul(&v(1)).substitute("v", 0, &w(0));
        assert_eq!(q, w(0).mul(&w(1)));
    }

    #[test]
    fn flow_differentiation() {
        // rule: v_t = v''' + v v'; then d/dt (v²/2) = v (v''' + v v')
        let mut rules = BTreeMap::new();
        let rhs = v(3).add(&v(0).mul(&v(1)));
        rules.insert(("v".to_string(), 0), rhs.clone());
        let p = v(0).mul(&v(0)).scale(&rat(1, 2));
        let d = p.differentiate_by_flow(&rules, &|_| false).unwrap();
        assert_eq!(d, v(0).mul(&rhs));
        // derivative rule: d/dt v' = ∂(rhs)
        let d1 = v(1).differentiate_by_flow(&rules, &|_| false).unwrap();
        assert_eq!(d1, rhs.total_x());
        // missing rule errors
        assert!(w(0).differentiate_by_flow(&rules, &|_| false).is_err());
        // frozen labels are skipped
        let dz = w(0).differentiate_by_flow(&rules, &|l| l == "w").unwrap();
        assert!(dz.is_zero());
    }

    #[test]
    fn integration_inverts_total_x() {
        let samples = vec![
            v(0).mul(&v(0)).mul(&w(1)),
            v(0).mul(&w(0)),
            v(2).mul(&w(3)).add(&v(0).pow(3)),
            v(1).mul(&v(1)).scale(&rat(5, 3)),
        ];
        for f in samples {
            let p = f.total_x();
            let g = p.integrate_total_x().unwrap();
            assert_eq!(g.total_x(), p);
        }
        // v v' integrates to v²/2
        let g = v(0).mul(&v(1)).integrate_total_x().unwrap();
        assert_eq!(g, v(0).mul(&v(0)).scale(&rat(1, 2)));
        // v² is not exact
        assert!(v(0).mul(&v(0)).integrate_total_x().is_err());
        // nonzero constants are not exact
        assert!(JetPoly::constant(rat_int(1)).integrate_total_x().is_err());
    }

    #[test]
    fn gradient_of_quadratic_trace_density() {
        // Z_2 with ω_1 (Gram [[0,1],[1,0]]): h = tr(V∘V)/2 has gradient V.
        let alg = build_zn(2, 1).unwrap();
        let vfield = field_element(&alg, "V");
        let density = vfield.pair(&vfield).unwrap().scale(&rat(1, 2));
        let grad = variational_gradient(&alg, &density, "V").unwrap();
        assert_eq!(grad, vfield);
    }

    #[test]
    fn gradient_of_mixed_density() {
        // h = ∫ v w over Z_2 (v = V[1], w = V[2]); Euler pair is (w, v) and
        // the Gram solve swaps back to gradient components (v, w).
        let alg = build_zn(2, 1).unwrap();
        let density = JetPoly::var("V", 0, 0).mul(&JetPoly::var("V", 1, 0));
        assert_eq!(density.euler("V", 0), JetPoly::var("V", 1, 0));
        assert_eq!(density.euler("V", 1), JetPoly::var("V", 0, 0));
        let grad = variational_gradient(&alg, &density, "V").unwrap();
        assert_eq!(
            grad.coords(),
            &[JetPoly::var("V", 0, 0), JetPoly::var("V", 1, 0)]
        );
        let zero = variational_gradient(&alg, &JetPoly::zero(), "V").unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn rendering_is_stable() {
        let p = v(2).scale(&rat(-1, 4)).add(&v(0).mul(&w(1)).scale(&rat_int(3)));
        assert_eq!(p.ascii(), "3*v[1]*w[1]' - 1/4*v[1]''");
        assert_eq!(
            p.latex(),
            "3 v_{[1]} w_{[1]}^{(1)} - \\tfrac{1}{4} v_{[1]}^{(2)}"
        );
    }
}
