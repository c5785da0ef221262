//! Lax-operator hierarchies: generic operators, flow derivation, zero
//! curvature, the algebra-valued KP equation and its reductions.

use std::collections::BTreeMap;

use crate::frobenius::{rat, rat_int, AlgebraRef};
use crate::jet::JetPoly;
use crate::psido::{Coef, PsiDO};
use crate::{Error, Result};

/// Evolution rules `∂(field component)/∂t_r` for one hierarchy time.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    pub time: u32,
    pub rules: BTreeMap<(String, usize), JetPoly>,
}

impl FlowSystem {
    pub fn rule(&self, label: &str, q: usize) -> Option<&JetPoly> {
        self.rules.get(&(label.to_string(), q))
    }

    /// Applies the flow as a derivation on a differential polynomial.
    pub fn apply(&self, p: &JetPoly) -> Result<JetPoly> {
        p.differentiate_by_flow(&self.rules, &|_| false)
    }

    /// Same, but leaving the given labels untouched (test functions).
    pub fn apply_frozen(&self, p: &JetPoly, frozen: &dyn Fn(&str) -> bool) -> Result<JetPoly> {
        p.differentiate_by_flow(&self.rules, frozen)
    }
}

/// Generic KP Lax operator `∂ + U_1∂^{-1} + ⋯ + U_depth∂^{-depth}`,
/// optionally with an order-0 term `U_0`. Coefficients below `−depth` are
/// unknown symbols, so the trust window stops there.
pub fn generic_l(alg: &AlgebraRef, depth: i64, with_u0: bool) -> PsiDO {
    let mut coeffs = BTreeMap::new();
    coeffs.insert(1, Coef::unit(alg));
    if with_u0 {
        coeffs.insert(0, crate::jet::field_element(alg, "U0"));
    }
    for i in 1..=depth {
        coeffs.insert(-i, crate::jet::field_element(alg, &format!("U{i}")));
    }
    PsiDO::new(alg, coeffs, 1, -depth).expect("window respected")
}

/// `B_r = (L^r)_+`.
pub fn b_r(l: &PsiDO, r: u32) -> Result<PsiDO> {
    l.power(r).plus_part()
}

/// Derives `∂U_i/∂t_r` from `∂L/∂t_r = [B_r, L]`. Rules are produced only
/// for the coefficients certified by the trust window.
pub fn flow_equations(l: &PsiDO, r: u32) -> Result<FlowSystem> {
    let alg = l.algebra().clone();
    let br = b_r(l, r)?;
    let comm = br.compose(l).sub(&l.compose(&br));
    // The flow must be tangent to the Lax shape: no order above the
    // highest U order present in L.
    let top = if l.coeff(0).map(|c| !c.is_zero()).unwrap_or(false) {
        0
    } else {
        -1
    };
    for o in (top + 1)..=comm.max_order() {
        if !comm.coeff(o)?.is_zero() {
            return Err(Error::Other(format!(
                "flow not tangent: nonzero commutator coefficient at order {o}"
            )));
        }
    }
    let mut rules = BTreeMap::new();
    for i in comm.trusted_min()..=top {
        let c = comm.coeff(i)?;
        let label = format!("U{}", -i);
        for q in 0..alg.dim() {
            rules.insert((label.clone(), q), c.coords()[q].clone());
        }
    }
    Ok(FlowSystem { time: r, rules })
}

/// Checks `∂B_l/∂t_r − ∂B_r/∂t_l + [B_l, B_r] = 0` after substituting both
/// derived flows.
pub fn zero_curvature_check(lax: &PsiDO, r: u32, l: u32) -> Result<bool> {
    let flow_r = flow_equations(lax, r)?;
    let flow_l = flow_equations(lax, l)?;
    let bl = b_r(lax, l)?;
    let br = b_r(lax, r)?;
    let dbl_dtr = differentiate_operator(&bl, &flow_r)?;
    let dbr_dtl = differentiate_operator(&br, &flow_l)?;
    let comm = bl.compose(&br).sub(&br.compose(&bl));
    let total = dbl_dtr.sub(&dbr_dtl).add(&comm);
    for i in 0..=total.max_order() {
        if !total.coeff(i)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coefficientwise flow derivative of a purely differential operator.
fn differentiate_operator(p: &PsiDO, flow: &FlowSystem) -> Result<PsiDO> {
    let alg = p.algebra().clone();
    let mut coeffs = BTreeMap::new();
    for (&i, c) in p.iter() {
        let dc: Vec<JetPoly> = c
            .coords()
            .iter()
            .map(|poly| flow.apply(poly))
            .collect::<Result<_>>()?;
        let dc = Coef::new(&alg, dc)?;
        if !dc.is_zero() {
            coeffs.insert(i, dc);
        }
    }
    PsiDO::new(&alg, coeffs, p.max_order(), p.trusted_min())
}

/// The algebra-valued KP equation in component form, with formal symbols
/// `Ut` for `∂𝒰/∂t_3` and `Uyy` for `∂²𝒰/∂t_2²` (x-jets of both allowed):
/// component k of `(4𝒰_t − 12 𝒰∘𝒰_x − 𝒰_xxx)_x − 3𝒰_yy`.
pub struct KpEquation {
    pub alg: AlgebraRef,
    pub components: Vec<JetPoly>,
}

pub fn kp_equation(alg: &AlgebraRef) -> KpEquation {
    let n = alg.dim();
    let u = crate::jet::field_element(alg, "U1");
    let ux = u.map(|p| p.total_x());
    let uux = u.mul(&ux).expect("same algebra");
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let inner = JetPoly::var("Ut", k, 0)
            .scale(&rat_int(4))
            .sub(&uux.coords()[k].scale(&rat_int(12)))
            .sub(&JetPoly::var("U1", k, 3));
        let comp = inner
            .total_x()
            .sub(&JetPoly::var("Uyy", k, 0).scale(&rat_int(3)));
        components.push(comp);
    }
    KpEquation {
        alg: alg.clone(),
        components,
    }
}

/// Verifies the KP equation as an identity of the hierarchy: substituting
/// `Ut → ∂U_1/∂t_3` and `Uyy → ∂²U_1/∂t_2²` (from the derived flows, with
/// `y = t_2`, `t = t_3`) must annihilate every component.
pub fn verify_kp_identity(alg: &AlgebraRef, depth: i64) -> Result<bool> {
    let l = generic_l(alg, depth, false);
    let flow2 = flow_equations(&l, 2)?;
    let flow3 = flow_equations(&l, 3)?;
    let eq = kp_equation(alg);
    for (k, comp) in eq.components.iter().enumerate() {
        let mut p = comp.clone();
        // Ut[k] jets → x-jets of the t3 rule for U1[k]; likewise Uyy.
        for q in 0..alg.dim() {
            let ut = flow3
                .rule("U1", q)
                .ok_or(Error::MissingFlowRule("U1".into(), q as u8))?
                .clone();
            p = p.substitute("Ut", q, &ut);
        }
        for q in 0..alg.dim() {
            let uy = flow2
                .rule("U1", q)
                .ok_or(Error::MissingFlowRule("U1".into(), q as u8))?;
            let uyy = flow2.apply(uy)?;
            p = p.substitute("Uyy", q, &uyy);
        }
        // Remaining U-jets evolve by nothing — the identity must already be
        // syntactic after eliminating the formal time symbols.
        if !p.is_zero() {
            return Err(Error::Other(format!(
                "KP identity fails in component {}: {}",
                k + 1,
                p.ascii()
            )));
        }
    }
    Ok(true)
}

/// Monic differential operator `𝓛 = 1_n ∂^m + V_{m−1}∂^{m−1} + ⋯ + V_0`;
/// `with_top = false` imposes the constraint `V_{m−1} = 0`.
pub fn gd_operator(alg: &AlgebraRef, m: u32, with_top: bool) -> PsiDO {
    let m = m as i64;
    let mut coeffs = BTreeMap::new();
    coeffs.insert(m, Coef::unit(alg));
    let top = if with_top { m - 1 } else { m - 2 };
    for i in 0..=top.max(-1) {
        if i >= 0 {
            coeffs.insert(i, crate::jet::field_element(alg, &format!("V{i}")));
        }
    }
    PsiDO::new(alg, coeffs, m, i64::MIN / 2).expect("window respected")
}

/// GD flow `∂𝓛/∂t_r = [(𝓛^{r/m})_+, 𝓛]` in the V-coordinates.
/// Returns the rules together with the (exact) commutator operator.
pub fn gd_flow(alg: &AlgebraRef, m: u32, r: u32, with_top: bool) -> Result<(FlowSystem, PsiDO)> {
    let lcal = gd_operator(alg, m, with_top);
    gd_flow_of(&lcal, m, r)
}

pub fn gd_flow_of(lcal: &PsiDO, m: u32, r: u32) -> Result<(FlowSystem, PsiDO)> {
    let alg = lcal.algebra().clone();
    let depth = (r + m + 2) as i64;
    let root = lcal.mth_root(m, depth)?;
    let br = root.power(r).plus_part()?;
    let comm = br.compose(lcal).sub(&lcal.compose(&br));
    // Tangency: the commutator is a differential operator of order ≤ m−1.
    for o in (m as i64)..=comm.max_order() {
        if !comm.coeff(o)?.is_zero() {
            return Err(Error::Other(format!(
                "GD flow not tangent at order {o}"
            )));
        }
    }
    let mut rules = BTreeMap::new();
    for i in 0..=(m as i64 - 1) {
        let c = comm.coeff(i)?;
        let label = format!("V{i}");
        for q in 0..alg.dim() {
            rules.insert((label.clone(), q), c.coords()[q].clone());
        }
    }
    Ok((FlowSystem { time: r, rules }, comm))
}

/// The coupled KdV system in the KP normalization: rewrites the
/// (m=2, r=3) GD flow of `𝓛 = ∂² + V` through `V = 2𝒰` and returns the
/// components of `4𝒰_t − 12 𝒰∘𝒰_x − 𝒰_xxx` evaluated on the flow, which
/// must vanish identically.
pub fn ckdv_residual(alg: &AlgebraRef) -> Result<Vec<JetPoly>> {
    let (flow, _) = gd_flow(alg, 2, 3, false)?;
    let n = alg.dim();
    let u = crate::jet::field_element(alg, "U");
    let ux = u.map(|p| p.total_x());
    let uux = u.mul(&ux).expect("same algebra");
    let mut out = Vec::with_capacity(n);
    for q in 0..n {
        // V_t in V-jets; substitute V[q] jets by 2*U[q].
        let mut vt = flow
            .rule("V0", q)
            .ok_or(Error::MissingFlowRule("V0".into(), q as u8))?
            .clone();
        for s in 0..n {
            vt = vt.substitute("V0", s, &JetPoly::var("U", s, 0).scale(&rat_int(2)));
        }
        // 4 u_t = 2 V_t in U-jets; residual = 2*V_t − 12 (U∘U_x)_q − U_q'''
        let resid = vt
            .scale(&rat_int(2))
            .sub(&uux.coords()[q].scale(&rat_int(12)))
            .sub(&JetPoly::var("U", q, 3));
        out.push(resid);
    }
    Ok(out)
}

/// Renders a flow system as sorted `d/dt_r field = rhs` lines.
pub fn render_flow(flow: &FlowSystem, latex: bool) -> String {
    let mut lines = Vec::new();
    for ((label, q), rhs) in &flow.rules {
        let lhs = if latex {
            format!("\\partial_{{t_{}}} {}_{{[{}]}}", flow.time, label, q + 1)
        } else {
            format!("d/dt{} {}[{}]", flow.time, label, q + 1)
        };
        let body = if latex { rhs.latex() } else { rhs.ascii() };
        lines.push(format!("{lhs} = {body}"));
    }
    lines.join("\n")
}

/// Scales a rational multiple of an algebra element, convenience for tests.
pub fn scaled(c: &Coef, num: i64, den: i64) -> Coef {
    c.scale(&rat(num, den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{build_z2_eps_mu, build_zn};

    fn z2() -> AlgebraRef {
        build_zn(2, 1).unwrap()
    }

    #[test]
    fn first_flow_is_x_translation() {
        let alg = z2();
        let l = generic_l(&alg, 4, false);
        let flow = flow_equations(&l, 1).unwrap();
        for i in 1..=3 {
            for q in 0..2 {
                assert_eq!(
                    flow.rule(&format!("U{i}"), q).unwrap(),
                    &JetPoly::var(format!("U{i}"), q, 1)
                );
            }
        }
    }

    #[test]
    fn second_flow_matches_printed_equations() {
        // U_{1,t2} = U_1'' + 2 U_2'
        let alg = z2();
        let l = generic_l(&alg, 5, false);
        let flow = flow_equations(&l, 2).unwrap();
        for q in 0..2 {
            let expect = JetPoly::var("U1", q, 2).add(&JetPoly::var("U2", q, 1).scale(&rat_int(2)));
            assert_eq!(flow.rule("U1", q).unwrap(), &expect);
        }
    }

    #[test]
    fn third_flow_identity_after_substitution() {
        // 2U_{1,t3} = 2U_1''' + 3U_2'' + 3U_{2,t2} + 6 U_1∘U_1'
        let alg = build_z2_eps_mu(&rat_int(1), &rat_int(0), 1).unwrap();
        let l = generic_l(&alg, 5, false);
        let f2 = flow_equations(&l, 2).unwrap();
        let f3 = flow_equations(&l, 3).unwrap();
        let u1 = crate::jet::field_element(&alg, "U1");
        let uux = u1.mul(&u1.map(|p| p.total_x())).unwrap();
        for q in 0..2 {
            let lhs = f3.rule("U1", q).unwrap().scale(&rat_int(2));
            let u2_t2 = f2.rule("U2", q).unwrap();
            let rhs = JetPoly::var("U1", q, 3)
                .scale(&rat_int(2))
                .add(&JetPoly::var("U2", q, 2).scale(&rat_int(3)))
                .add(&u2_t2.scale(&rat_int(3)))
                .add(&uux.coords()[q].scale(&rat_int(6)));
            assert_eq!(&lhs, &rhs);
        }
    }

    #[test]
    fn zero_curvature_holds() {
        let alg = z2();
        let l = generic_l(&alg, 6, false);
        assert!(zero_curvature_check(&l, 2, 3).unwrap());
        assert!(zero_curvature_check(&l, 2, 2).unwrap());
    }

    #[test]
    fn cross_flow_commutativity() {
        let alg = z2();
        let l = generic_l(&alg, 7, false);
        let f2 = flow_equations(&l, 2).unwrap();
        let f3 = flow_equations(&l, 3).unwrap();
        for i in 1..=2 {
            for q in 0..2 {
                let p = JetPoly::var(format!("U{i}"), q, 0);
                let a = f3.apply(&f2.apply(&p).unwrap()).unwrap();
                let b = f2.apply(&f3.apply(&p).unwrap()).unwrap();
                assert_eq!(a, b, "U{i}[{q}]");
            }
        }
    }

    #[test]
    fn kp_identity_and_components() {
        // scalar case first, then the two-dimensional family
        let scalar = build_zn(1, 0).unwrap();
        assert!(verify_kp_identity(&scalar, 5).unwrap());
        let eps_mu = build_z2_eps_mu(&rat_int(1), &rat_int(0), 1).unwrap();
        assert!(verify_kp_identity(&eps_mu, 5).unwrap());

        // component expansion carries the 12ε ww_x and 12μ ww_x cross terms
        let alg = build_z2_eps_mu(&rat_int(1), &rat_int(2), 2).unwrap();
        let eq = kp_equation(&alg);
        let w = |j| JetPoly::var("U1", 1, j);
        // first component contains −12ε (w w')' = −12 (w w')'
        let cross0 = w(0).mul(&w(1)).scale(&rat_int(-12)).total_x();
        let v = |j| JetPoly::var("U1", 0, j);
        let vv = v(0).mul(&v(1)).scale(&rat_int(-12)).total_x();
        let expect0 = JetPoly::var("Ut", 0, 1).scale(&rat_int(4))
            .add(&vv)
            .add(&cross0)
            .sub(&v(4))
            .sub(&JetPoly::var("Uyy", 0, 0).scale(&rat_int(3)));
        assert_eq!(eq.components[0], expect0);
        // second component: −12 (vw)_x' − 12μ (w w')'
        let vw = v(0).mul(&w(1)).add(&v(1).mul(&w(0)));
        let expect1 = JetPoly::var("Ut", 1, 1).scale(&rat_int(4))
            .add(&vw.scale(&rat_int(-12)).total_x())
            .add(&w(0).mul(&w(1)).scale(&rat_int(-24)).total_x())
            .sub(&w(4))
            .sub(&JetPoly::var("Uyy", 1, 0).scale(&rat_int(3)));
        assert_eq!(eq.components[1], expect1);
    }

    #[test]
    fn coupled_kdv_from_gd_reduction() {
        // 4v_t = 12vv_x + v_xxx and 4w_t = 12(vw)_x + w_xxx, i.e. the
        // residual of the KP-normalized system vanishes identically.
        for alg in [build_zn(1, 0).unwrap(), z2(), build_zn(3, 1).unwrap()] {
            let resid = ckdv_residual(&alg).unwrap();
            for (q, r) in resid.iter().enumerate() {
                assert!(r.is_zero(), "{} component {}: {}", alg.name(), q, r.ascii());
            }
        }
    }

    #[test]
    fn gd_trivial_flow_when_r_divisible() {
        let alg = z2();
        let (flow, comm) = gd_flow(&alg, 2, 2, false).unwrap();
        assert!(comm.is_zero_on_window());
        assert!(flow.rules.values().all(|p| p.is_zero()));
    }

    #[test]
    fn boussinesq_first_flow() {
        // m=3, r=2 on 𝓛 = ∂³ + V1∂ + V0 (scalar algebra):
        // V1_t = 2V0' − V1'', V0_t = V0'' − (2/3)V1''' − (2/3)V1 V1'
        let alg = build_zn(1, 0).unwrap();
        let (flow, _) = gd_flow(&alg, 3, 2, false).unwrap();
        let v0 = |j| JetPoly::var("V0", 0, j);
        let v1 = |j| JetPoly::var("V1", 0, j);
        let v1t = flow.rule("V1", 0).unwrap();
        assert_eq!(v1t, &v0(1).scale(&rat_int(2)).sub(&v1(2)));
        let v0t = flow.rule("V0", 0).unwrap();
        let expect = v0(2)
            .sub(&v1(3).scale(&rat(2, 3)))
            .sub(&v1(0).mul(&v1(1)).scale(&rat(2, 3)));
        assert_eq!(v0t, &expect);
    }

    #[test]
    fn with_u0_flows_are_tangent() {
        let alg = z2();
        let l = generic_l(&alg, 4, true);
        let flow = flow_equations(&l, 2).unwrap();
        assert!(flow.rule("U0", 0).is_some());
    }
}
