//! Numeric verification of the closed-form one-soliton τ-function.
//!
//! All derivatives come from exact truncated Taylor (jet) arithmetic over
//! the algebra, so residuals are bounded by double-precision rounding, not
//! by a discretization step.

use crate::frobenius::{AlgebraElement, AlgebraRef};
use crate::{Error, Result};

pub type NumEl = AlgebraElement<f64>;

fn tri_len(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// Index of the x^a t^b coefficient in the triangular layout.
fn idx(a: usize, b: usize, d: usize) -> usize {
    debug_assert!(a + b <= d);
    // group by total degree s = a + b, then by b
    let s = a + b;
    s * (s + 1) / 2 + b
}

/// Truncated two-variable Taylor expansion around a base point, with
/// algebra-valued coefficients: `Σ_{a+b≤d} c_{ab} (x−x₀)^a (t−t₀)^b`.
#[derive(Debug, Clone)]
pub struct TaylorJet {
    alg: AlgebraRef,
    d: usize,
    c: Vec<NumEl>,
}

impl TaylorJet {
    pub fn zero(alg: &AlgebraRef, d: usize) -> Self {
        TaylorJet {
            alg: alg.clone(),
            d,
            c: vec![NumEl::zero(alg); tri_len(d)],
        }
    }

    pub fn constant(e: &NumEl, d: usize) -> Self {
        let mut j = TaylorJet::zero(&e.algebra().clone(), d);
        j.c[0] = e.clone();
        j
    }

    /// The coordinate jet `x₀ + (x − x₀)`.
    pub fn var_x(alg: &AlgebraRef, d: usize, x0: f64) -> Self {
        let mut j = TaylorJet::zero(alg, d);
        j.c[idx(0, 0, d)] = NumEl::unit(alg).scale_ring(&x0);
        if d >= 1 {
            j.c[idx(1, 0, d)] = NumEl::unit(alg);
        }
        j
    }

    pub fn var_t(alg: &AlgebraRef, d: usize, t0: f64) -> Self {
        let mut j = TaylorJet::zero(alg, d);
        j.c[idx(0, 0, d)] = NumEl::unit(alg).scale_ring(&t0);
        if d >= 1 {
            j.c[idx(0, 1, d)] = NumEl::unit(alg);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn coeff(&self, a: usize, b: usize) -> &NumEl {
        &self.c[idx(a, b, self.d)]
    }

    /// Value at the base point.
    pub fn value(&self) -> &NumEl {
        &self.c[0]
    }

    /// Drops terms above total degree `d` (d ≤ current order).
    pub fn truncate(&self, d: usize) -> Self {
        assert!(d <= self.d);
        let mut out = TaylorJet::zero(&self.alg, d);
        for a in 0..=d {
            for b in 0..=(d - a) {
                out.c[idx(a, b, d)] = self.coeff(a, b).clone();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.d.min(other.d);
        let (x, y) = (self.truncate(d), other.truncate(d));
        let mut out = TaylorJet::zero(&self.alg, d);
        for i in 0..out.c.len() {
            out.c[i] = x.c[i].add(&y.c[i]);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.c {
            *e = e.neg();
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.c {
            *e = e.scale_ring(&s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let d = self.d.min(other.d);
        let (x, y) = (self.truncate(d), other.truncate(d));
        let mut out = TaylorJet::zero(&self.alg, d);
        for a1 in 0..=d {
            for b1 in 0..=(d - a1) {
                let f = x.coeff(a1, b1);
                if f.is_zero() {
                    continue;
                }
                for a2 in 0..=(d - a1 - b1) {
                    for b2 in 0..=(d - a1 - b1 - a2) {
                        let g = y.coeff(a2, b2);
                        if g.is_zero() {
                            continue;
                        }
                        let k = idx(a1 + a2, b1 + b2, d);
                        out.c[k] = out.c[k].add(&f.mul(g)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse by Newton iteration `X ← X(2 − JX)`;
    /// requires an invertible value at the base point.
    pub fn inv(&self) -> Result<Self> {
        let mut x = TaylorJet::constant(&self.value().inv()?, self.d);
        let two = TaylorJet::constant(&NumEl::unit(&self.alg).scale_ring(&2.0), self.d);
        let mut correct = 1usize;
        while correct <= self.d {
            x = x.mul(&two.sub(&self.mul(&x)?))?;
            correct *= 2;
        }
        Ok(x)
    }

    /// Exponential: splits off the base value and expands the rest (which is
    /// nilpotent at truncation order) as a finite series.
    pub fn exp(&self) -> Result<Self> {
        let c0 = self.value().clone();
        let mut n = self.clone();
        n.c[0] = NumEl::zero(&self.alg);
        let mut series = TaylorJet::constant(&NumEl::unit(&self.alg), self.d);
        let mut term = TaylorJet::constant(&NumEl::unit(&self.alg), self.d);
        for k in 1..=self.d {
            term = term.mul(&n)?.scale(1.0 / k as f64);
            series = series.add(&term);
        }
        series.mul(&TaylorJet::constant(&c0.exp(), self.d))
    }

    /// Formal ∂/∂x; the result is certified one order lower.
    pub fn dx(&self) -> Self {
        let d = self.d - 1;
        let mut out = TaylorJet::zero(&self.alg, d);
        for a in 0..=d {
            for b in 0..=(d - a) {
                out.c[idx(a, b, d)] = self.coeff(a + 1, b).scale_ring(&((a + 1) as f64));
            }
        }
        out
    }

    pub fn dt(&self) -> Self {
        let d = self.d - 1;
        let mut out = TaylorJet::zero(&self.alg, d);
        for a in 0..=d {
            for b in 0..=(d - a) {
                out.c[idx(a, b, d)] = self.coeff(a, b + 1).scale_ring(&((b + 1) as f64));
            }
        }
        out
    }

    /// Scalar jet of one algebra component (over the scalar algebra).
    pub fn component(&self, q: usize) -> TaylorJet {
        let scalar = crate::frobenius::build_zn(1, 0).expect("scalar algebra");
        let mut out = TaylorJet::zero(&scalar, self.d);
        for (i, e) in self.c.iter().enumerate() {
            out.c[i] = NumEl::new(&scalar, vec![e.coords()[q]]).expect("dim 1");
        }
        out
    }
}

/// The one-soliton τ-function `τ = 1 + exp(2Ax + 2A³t)`.
#[derive(Debug, Clone)]
pub struct TauFunction {
    pub generator: NumEl,
}

impl TauFunction {
    pub fn new(generator: NumEl) -> Self {
        TauFunction { generator }
    }

    /// Exact truncated Taylor expansion of τ around `(x₀, t₀)`.
    pub fn eval(&self, x0: f64, t0: f64, d: usize) -> Result<TaylorJet> {
        let alg = self.generator.algebra().clone();
        let a2 = self.generator.scale_ring(&2.0);
        let a3 = self
            .generator
            .mul(&self.generator)?
            .mul(&self.generator)?
            .scale_ring(&2.0);
        let phase = TaylorJet::var_x(&alg, d, x0)
            .mul(&TaylorJet::constant(&a2, d))?
            .add(&TaylorJet::var_t(&alg, d, t0).mul(&TaylorJet::constant(&a3, d))?);
        let one = TaylorJet::constant(&NumEl::unit(&alg), d);
        Ok(one.add(&phase.exp()?))
    }
}

/// `𝒰 = ∂_x(τ_x ∘ τ^{-1})` from a τ-jet; two orders are consumed.
pub fn u_from_tau(tau: &TaylorJet) -> Result<TaylorJet> {
    if tau.order() < 2 {
        return Err(Error::Other("jet order too small for 𝒰".into()));
    }
    Ok(tau.dx().mul(&tau.inv()?)?.dx())
}

/// Component route for two-dimensional algebras:
/// `v = (log τ₀)_xx`, `w = (τ₁/τ₀)_xx`, returned as scalar jets.
pub fn u_components_route(tau: &TaylorJet) -> Result<(TaylorJet, TaylorJet)> {
    let t0 = tau.component(0);
    let t1 = tau.component(1);
    // (log τ₀)_xx = ∂_x(τ₀' / τ₀)
    let v = t0.dx().mul(&t0.inv()?)?.dx();
    let w = t1.mul(&t0.inv()?)?.dx().dx();
    Ok((v, w))
}

/// Evenly spaced grid `lo..hi` with `n` points per axis, squared.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let step = if n > 1 { (hi - lo) / (n as f64 - 1.0) } else { 0.0 };
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push((lo + step * i as f64, lo + step * j as f64));
        }
    }
    pts
}

/// One evaluated grid point: 𝒰 components and the per-component residual of
/// `4𝒰_t − 12𝒰∘𝒰_x − 𝒰_xxx`.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub x: f64,
    pub t: f64,
    pub u: Vec<f64>,
    pub residual: Vec<f64>,
}

/// Evaluates τ on a grid and reports 𝒰 and the KdV residual per point.
pub fn kdv_grid(tau: &TauFunction, grid: &[(f64, f64)], d: usize) -> Result<Vec<GridRow>> {
    if d < 5 {
        return Err(Error::Other("jet order must be at least 5".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &(x, t) in grid {
        let tj = tau.eval(x, t, d)?;
        let u = u_from_tau(&tj)?;
        let r = u
            .dt()
            .value()
            .scale_ring(&4.0)
            .sub(&u.value().mul(u.dx().value())?.scale_ring(&12.0))
            .sub(u.dx().dx().dx().value());
        rows.push(GridRow {
            x,
            t,
            u: u.value().coords().to_vec(),
            residual: r.coords().iter().map(|c| c.abs()).collect(),
        });
    }
    Ok(rows)
}

/// Per-component maximum of the KdV residual over the grid.
pub fn kdv_residual(tau: &TauFunction, grid: &[(f64, f64)], d: usize) -> Result<Vec<f64>> {
    let n = tau.generator.algebra().dim();
    let mut max = vec![0.0f64; n];
    for row in kdv_grid(tau, grid, d)? {
        for (m, r) in max.iter_mut().zip(&row.residual) {
            *m = m.max(*r);
        }
    }
    Ok(max)
}

/// Maximum absolute disagreement between the direct and the component
/// extraction routes for 𝒰 over a grid (two-dimensional algebras).
pub fn route_agreement(tau: &TauFunction, grid: &[(f64, f64)], d: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(x, t) in grid {
        let tj = tau.eval(x, t, d)?;
        let u = u_from_tau(&tj)?;
        let (v, w) = u_components_route(&tj)?;
        worst = worst
            .max((u.value().coords()[0] - v.value().coords()[0]).abs())
            .max((u.value().coords()[1] - w.value().coords()[0]).abs());
    }
    Ok(worst)
}

/// Gauge invariance: `τ ↦ C₀ ∘ e^{C₁x} ∘ τ` leaves 𝒰 unchanged.
pub fn gauge_check(
    tau: &TauFunction,
    c0: &NumEl,
    c1: &NumEl,
    grid: &[(f64, f64)],
    d: usize,
    tol: f64,
) -> Result<bool> {
    c0.inv()?;
    for &(x, t) in grid {
        let tj = tau.eval(x, t, d)?;
        let gauge = TaylorJet::var_x(&tj.alg, d, x)
            .mul(&TaylorJet::constant(c1, d))?
            .exp()?
            .mul(&TaylorJet::constant(c0, d))?;
        let u1 = u_from_tau(&tj)?;
        let u2 = u_from_tau(&gauge.mul(&tj)?)?;
        let diff = u1.value().sub(u2.value());
        if diff.coords().iter().any(|c| c.abs() > tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::build_zn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z2() -> AlgebraRef {
        build_zn(2, 1).unwrap()
    }

    fn soliton(a: f64, b: f64) -> TauFunction {
        let alg = z2();
        TauFunction::new(NumEl::new(&alg, vec![a, b]).unwrap())
    }

    #[test]
    fn tau_components_closed_form() {
        // τ₀ = 1 + e^{2ax+2a³t}, τ₁ = (2bx + 6a²bt)·e^{2ax+2a³t}
        let tau = soliton(1.0, 0.5);
        for (x, t) in [(0.0, 0.0), (1.0, -0.5), (-2.0, 0.25)] {
            let j = tau.eval(x, t, 4).unwrap();
            let e = (2.0 * x + 2.0 * t).exp();
            let t0 = 1.0 + e;
            let t1 = (2.0 * 0.5 * x + 3.0 * t) * e;
            assert!((j.value().coords()[0] - t0).abs() < 1e-12 * t0.abs());
            assert!((j.value().coords()[1] - t1).abs() < 1e-12 * (1.0 + t1.abs()));
        }
    }

    #[test]
    fn tau_degenerate_generators() {
        let alg = z2();
        // A = 0 → τ ≡ 2·unit
        let tau = TauFunction::new(NumEl::zero(&alg));
        let j = tau.eval(1.5, -2.0, 4).unwrap();
        assert_eq!(j.value().coords(), &[2.0, 0.0]);
        // b = 0 → second component vanishes identically
        let tau = soliton(1.0, 0.0);
        let j = tau.eval(0.7, 0.3, 4).unwrap();
        assert_eq!(j.value().coords()[1], 0.0);
    }

    #[test]
    fn u_values_at_origin() {
        // a = b = 1, (0,0): v = 1 and w = 2
        let tau = soliton(1.0, 1.0);
        let j = tau.eval(0.0, 0.0, 5).unwrap();
        let u = u_from_tau(&j).unwrap();
        assert!((u.value().coords()[0] - 1.0).abs() <= 1e-12);
        assert!((u.value().coords()[1] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn jet_mul_inv_properties() {
        let alg = z2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut rand_jet = TaylorJet::zero(&alg, 4);
            for a in 0..=4usize {
                for b in 0..=(4 - a) {
                    let e = NumEl::new(&alg, vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                        .unwrap();
                    let k = idx(a, b, 4);
                    rand_jet.c[k] = e;
                }
            }
            // force invertibility
            rand_jet.c[0] = rand_jet.c[0].add(&NumEl::unit(&alg).scale_ring(&3.0));
            let other = rand_jet.dx().mul(&rand_jet.truncate(3)).unwrap();
            let ab = rand_jet.truncate(3).mul(&other).unwrap();
            let ba = other.mul(&rand_jet.truncate(3)).unwrap();
            for (p, q) in ab.c.iter().zip(&ba.c) {
                let d = p.sub(q);
                assert!(d.coords().iter().all(|c| c.abs() < 1e-10));
            }
            let inv = rand_jet.inv().unwrap();
            let prod = rand_jet.mul(&inv).unwrap();
            assert!((prod.value().coords()[0] - 1.0).abs() < 1e-10);
            for (i, e) in prod.c.iter().enumerate().skip(1) {
                assert!(
                    e.coords().iter().all(|c| c.abs() < 1e-8),
                    "coefficient {i} = {e}"
                );
            }
        }
    }

    #[test]
    fn residual_on_grid() {
        let tau = soliton(1.0, 1.0);
        let grid = square_grid(-5.0, 5.0, 21);
        let max = kdv_residual(&tau, &grid, 5).unwrap();
        assert!(max.iter().all(|&m| m <= 1e-9), "{max:?}");
    }

    #[test]
    fn residual_scalar_and_zero() {
        let scalar = build_zn(1, 0).unwrap();
        let tau = TauFunction::new(NumEl::new(&scalar, vec![1.0]).unwrap());
        let grid = square_grid(-5.0, 5.0, 11);
        let max = kdv_residual(&tau, &grid, 5).unwrap();
        assert!(max[0] <= 1e-9, "{max:?}");

        let tau0 = TauFunction::new(NumEl::zero(&z2()));
        let max = kdv_residual(&tau0, &grid, 5).unwrap();
        assert_eq!(max, vec![0.0, 0.0]);
    }

    #[test]
    fn component_route_agrees() {
        let tau = soliton(1.0, 1.0);
        let grid = square_grid(-5.0, 5.0, 5);
        assert!(route_agreement(&tau, &grid, 5).unwrap() <= 1e-10);
    }

    #[test]
    fn component_route_residual_matches() {
        // CKDV residuals on (v, w) from the component route coincide with
        // the algebra-valued residual components
        let tau = soliton(1.0, 0.75);
        for (x, t) in [(0.5, -0.25), (-1.0, 1.0)] {
            let j = tau.eval(x, t, 5).unwrap();
            let u = u_from_tau(&j).unwrap();
            let r_alg = u
                .dt()
                .value()
                .scale_ring(&4.0)
                .sub(&u.value().mul(u.dx().value()).unwrap().scale_ring(&12.0))
                .sub(u.dx().dx().dx().value());
            let (v, w) = u_components_route(&j).unwrap();
            let val = |j: &TaylorJet| j.value().coords()[0];
            let rv = 4.0 * val(&v.dt()) - 12.0 * val(&v) * val(&v.dx()) - val(&v.dx().dx().dx());
            let rw = 4.0 * val(&w.dt())
                - 12.0 * (val(&v) * val(&w.dx()) + val(&w) * val(&v.dx()))
                - val(&w.dx().dx().dx());
            assert!((r_alg.coords()[0] - rv).abs() <= 1e-10);
            assert!((r_alg.coords()[1] - rw).abs() <= 1e-10);
        }
    }

    #[test]
    fn gauge_invariance() {
        let alg = z2();
        let tau = soliton(1.0, 1.0);
        let grid = square_grid(-2.0, 2.0, 3);
        let unit = NumEl::unit(&alg);
        let zero = NumEl::zero(&alg);
        assert!(gauge_check(&tau, &unit.scale_ring(&2.0), &zero, &grid, 6, 1e-10).unwrap());
        let c0 = NumEl::new(&alg, vec![1.0, 1.0]).unwrap();
        let c1 = NumEl::new(&alg, vec![3.0, 0.0]).unwrap();
        assert!(gauge_check(&tau, &c0, &c1, &grid, 6, 1e-10).unwrap());
        assert!(gauge_check(&tau, &unit, &zero, &grid, 6, 0.0).unwrap());
    }
}
