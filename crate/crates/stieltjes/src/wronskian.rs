// SPDX-License-Identifier: Apache-2.0
//! g-Wronskians of solution pairs and the identities relating them.

use num_complex::Complex64;

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::gcalculus::{self, RegressiveFn};
use crate::gmeasure::GFunction;
use crate::mutation::{self, Mutation};

type C = Complex64;

const INDEPENDENCE_EPS: f64 = 1e-12;

/// Two functions with first and second g-derivatives.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    pub y1: GFunction,
    pub y2: GFunction,
}

impl SolutionPair {
    pub fn new(y1: GFunction, y2: GFunction) -> Self {
        SolutionPair { y1, y2 }
    }

    pub fn swapped(&self) -> Self {
        SolutionPair { y1: self.y2.clone(), y2: self.y1.clone() }
    }
}

/// Full g-Wronskian
/// `y1 y2' − y2 y1' + (y1 y2'' − y2 y1'')Δg + (y1' y2'' − y2' y1'')Δg²`.
pub fn wronskian_g(d: &Derivator, pair: &SolutionPair, t: f64) -> Result<C> {
    let (a, b) = (&pair.y1, &pair.y2);
    let (a0, a1, a2) = (a.eval(t), a.d1(t)?, a.d2(t)?);
    let (b0, b1, b2) = (b.eval(t), b.d1(t)?, b.d2(t)?);
    let dg = d.jump(t);
    let mut w = a0 * b1 - b0 * a1 + (a0 * b2 - b0 * a2) * dg;
    if !mutation::active(Mutation::DropWronskianDg2) {
        w += (a1 * b2 - b1 * a2) * dg * dg;
    }
    Ok(w)
}

/// `y1(t+) y2'(t+) − y2(t+) y1'(t+)` with the right limits taken numerically
/// from the values and first derivatives.
pub fn wronskian_g_right_limits(d: &Derivator, pair: &SolutionPair, t: f64) -> Result<C> {
    let d1 = pair.y1.first_derivative().ok_or_else(|| Error::Contract("y1 carries no first g-derivative".into()))?;
    let d2 = pair.y2.first_derivative().ok_or_else(|| Error::Contract("y2 carries no first g-derivative".into()))?;
    if !d.is_jump(t) {
        return wronskian_simplified(d, pair, t);
    }
    let lim = |f: &GFunction| gcalculus::right_limit(d, f, t);
    Ok(lim(&pair.y1) * lim(&d2) - lim(&pair.y2) * lim(&d1))
}

/// Simplified g-Wronskian `y1 y2' − y2 y1'`.
pub fn wronskian_simplified(_d: &Derivator, pair: &SolutionPair, t: f64) -> Result<C> {
    let (a, b) = (&pair.y1, &pair.y2);
    Ok(a.eval(t) * b.d1(t)? - b.eval(t) * a.d1(t)?)
}

/// `1 − PΔg + QΔg²` at `t`.
pub fn pq_factor(d: &Derivator, p: &GFunction, q: &GFunction, t: f64) -> C {
    let dg = d.jump(t);
    1.0 - p.eval(t) * dg + q.eval(t) * dg * dg
}

/// `|W_g − (1 − PΔg + QΔg²) W̃_g|` at `t`.
pub fn wronskian_relation_residual(d: &Derivator, pair: &SolutionPair, p: &GFunction, q: &GFunction, t: f64) -> Result<f64> {
    let w = wronskian_g(d, pair, t)?;
    let ws = wronskian_simplified(d, pair, t)?;
    Ok((w - pq_factor(d, p, q, t) * ws).norm())
}

/// The coefficient `−P + QΔg` of the simplified Wronskian's exponential.
pub fn wronskian_coefficient(d: &Derivator, p: &GFunction, q: &GFunction) -> GFunction {
    let (pp, qq, dd) = (p.clone(), q.clone(), d.clone());
    GFunction::new("−P+QΔg", move |s| -pp.eval(s) + qq.eval(s) * dd.jump(s))
        .with_shape(p.shape().map(|x| -x))
        .with_breaks(p.breaks().iter().chain(q.breaks()).copied())
}

/// Checks `1 − PΔg + QΔg² ≠ 0` at every jump.
pub fn check_cond_pq(d: &Derivator, p: &GFunction, q: &GFunction) -> Result<()> {
    for j in d.jumps() {
        if !(pq_factor(d, p, q, j.t).norm() > 1e-12) {
            return Err(Error::CondPQ { t: j.t });
        }
    }
    Ok(())
}

/// `exp_g(−P + QΔg)` as a regressive coefficient, with regressivity failures
/// reported as violations of the nondegeneracy condition.
pub fn wronskian_exponent(d: &Derivator, p: &GFunction, q: &GFunction) -> Result<RegressiveFn> {
    check_cond_pq(d, p, q)?;
    RegressiveFn::new(d, wronskian_coefficient(d, p, q)).map_err(|e| match e {
        Error::NotRegressive { t, .. } => Error::CondPQ { t },
        other => other,
    })
}

/// `w0 · exp_g(−P + QΔg; t)`, the simplified Wronskian of any solution pair
/// with `W̃(0) = w0`.
pub fn wronskian_exp_form(d: &Derivator, p: &GFunction, q: &GFunction, w0: C, t: f64) -> Result<C> {
    Ok(w0 * gcalculus::g_exponential(d, &wronskian_exponent(d, p, q)?, t)?)
}

/// `[w0 (1 − PΔg + QΔg²)]⁻¹ exp_g(⊖(−P + QΔg); t)`, the reciprocal of the full
/// Wronskian.
pub fn wronskian_inverse(d: &Derivator, p: &GFunction, q: &GFunction, w0: C, t: f64) -> Result<C> {
    if w0.norm() == 0.0 {
        return Err(Error::Precondition { t: 0.0, what: "W̃(0) = 0".into() });
    }
    let r = wronskian_exponent(d, p, q)?;
    let inv = RegressiveFn::new(d, gcalculus::circle_minus(d, r.p()))?;
    Ok(gcalculus::g_exponential(d, &inv, t)? / (w0 * pq_factor(d, p, q, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Independence {
    Independent,
    /// No grid point certified independence; dependence is never claimed.
    Inconclusive,
}

/// Certifies linear independence when a Wronskian is clearly nonzero at some
/// grid point, relative to `max(1, ‖y1‖ ‖y2'‖)`.
pub fn independence_test(d: &Derivator, pair: &SolutionPair, n: usize) -> Independence {
    let grid = d.grid(n);
    let sup = |f: &dyn Fn(f64) -> Option<C>| grid.iter().filter_map(|&t| f(t)).map(|v| v.norm()).fold(0.0, f64::max);
    let scale = 1f64.max(sup(&|t| Some(pair.y1.eval(t))) * sup(&|t| pair.y2.deriv1(t)));
    let full = pair.y1.has_deriv2() && pair.y2.has_deriv2();
    for &t in &grid {
        let w = if full { wronskian_g(d, pair, t) } else { wronskian_simplified(d, pair, t) };
        if let Ok(w) = w {
            if w.norm() > INDEPENDENCE_EPS * scale {
                return Independence::Independent;
            }
        }
    }
    Independence::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::{Density, Piece};

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn cos_sin() -> SolutionPair {
        let y1 = GFunction::real("cos", f64::cos).with_deriv1(|t| c(-t.sin())).with_deriv2(|t| c(-t.cos()));
        let y2 = GFunction::real("sin", f64::sin).with_deriv1(|t| c(t.cos())).with_deriv2(|t| c(-t.sin()));
        SolutionPair::new(y1, y2)
    }

    #[test]
    fn classical_pair() {
        let d = Derivator::identity(3.0);
        let pair = cos_sin();
        for t in [0.0, 1.0, 2.5] {
            assert!((wronskian_g(&d, &pair, t).unwrap() - c(1.0)).norm() < 1e-15);
            assert!((wronskian_simplified(&d, &pair, t).unwrap() - c(1.0)).norm() < 1e-15);
            let r = wronskian_relation_residual(&d, &pair, &GFunction::zero(), &GFunction::constant(c(1.0)), t);
            assert!(r.unwrap() < 1e-10);
        }
        assert_eq!(independence_test(&d, &pair, 64), Independence::Independent);
        let w = wronskian_simplified(&d, &pair.swapped(), 1.0).unwrap();
        assert!((w + c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn proportional_pair_is_inconclusive() {
        let d = Derivator::with_jumps(3.0, &[(1.0, 0.5)]);
        let y1 = gcalculus::exp_const_gfunction(&d, c(0.3)).unwrap();
        let (a, b) = (y1.clone(), y1.clone());
        let y2 = GFunction::new("3y1", move |t| 3.0 * a.eval(t))
            .with_deriv1(move |t| 3.0 * b.deriv1(t).unwrap())
            .with_deriv2({
                let y = y1.clone();
                move |t| 3.0 * y.deriv2(t).unwrap()
            });
        let pair = SolutionPair::new(y1, y2);
        for t in d.grid(16) {
            assert!(wronskian_simplified(&d, &pair, t).unwrap().norm() < 1e-13);
        }
        assert_eq!(independence_test(&d, &pair, 64), Independence::Inconclusive);
    }

    /// g jumps by 1 at t = 1 on [0, 2]; y1 = g, y2 = e^t before and 2e^t after
    /// the jump. W vanishes at the jump while its left limit is −e.
    #[test]
    fn wronskian_not_left_continuous() {
        let d = Derivator::new(
            2.0,
            -1.0,
            vec![Piece { from: 0.0, to: 2.0, density: Density::Const { value: 1.0 } }],
            vec![crate::derivator::Jump { t: 1.0, d: 1.0 }],
        );
        assert!(d.validate().is_empty());
        let dd = d.clone();
        let y1 = GFunction::real("g", move |t| dd.g(t)).with_deriv1(|_| c(1.0)).with_deriv2(|_| c(0.0));
        let y2v = |t: f64| if t <= 1.0 { t.exp() } else { 2.0 * t.exp() };
        let y2d = |t: f64| if t < 1.0 { t.exp() } else if t == 1.0 { 1f64.exp() } else { 2.0 * t.exp() };
        let y2 = GFunction::real("y2", y2v)
            .with_deriv1(move |t| c(y2d(t)))
            .with_deriv2(move |t| c(y2d(t)))
            .with_breaks([1.0]);
        let pair = SolutionPair::new(y1, y2);
        let e = 1f64.exp();
        assert!(wronskian_g(&d, &pair, 1.0).unwrap().norm() < 1e-14);
        let left = wronskian_g(&d, &pair, 1.0 - 1e-9).unwrap();
        assert!((left - c(-e)).norm() < 1e-7);
        let right = wronskian_g(&d, &pair, 1.0 + 1e-9).unwrap();
        assert!(right.norm() < 1e-7);
        assert!(wronskian_g_right_limits(&d, &pair, 1.0).unwrap().norm() < 1e-9);
        let _m = mutation::inject(Mutation::DropWronskianDg2);
        assert!((wronskian_g(&d, &pair, 1.0).unwrap() - c(-e)).norm() < 1e-14);
    }

    #[test]
    fn exp_form_and_inverse() {
        let d = Derivator::with_jumps(3.0, &[(1.0, 0.5), (2.0, 0.25)]);
        let (p, q) = (GFunction::zero(), GFunction::zero());
        assert_eq!(wronskian_exp_form(&d, &p, &q, c(2.0), 2.5).unwrap(), c(2.0));
        assert_eq!(wronskian_exp_form(&d, &p, &q, c(0.0), 2.5).unwrap(), c(0.0));
        assert!((wronskian_inverse(&d, &p, &q, c(1.0), 2.5).unwrap() - c(1.0)).norm() < 1e-15);
        assert!(wronskian_inverse(&d, &p, &q, c(0.0), 2.5).is_err());
        let p = GFunction::constant(c(0.4));
        let q = GFunction::constant(c(1.3));
        let l1 = crate::solver::char_roots(c(0.4), c(1.3));
        let pair = crate::solver::homogeneous_basis_const(&d, c(0.4), c(1.3)).unwrap();
        let w0 = l1.1 - l1.0;
        for t in d.grid(64) {
            let w = wronskian_g(&d, &pair, t).unwrap();
            let inv = wronskian_inverse(&d, &p, &q, w0, t).unwrap();
            assert!((w * inv - 1.0).norm() < 1e-10, "t={t}");
            let ws = wronskian_simplified(&d, &pair, t).unwrap();
            assert!((ws - wronskian_exp_form(&d, &p, &q, w0, t).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn cond_pq_violation_names_jump() {
        let d = Derivator::with_jumps(3.0, &[(1.0, 1.0)]);
        // 1 − P + Q = 0 with P = 2, Q = 1.
        let r = wronskian_exp_form(&d, &GFunction::constant(c(2.0)), &GFunction::constant(c(1.0)), c(1.0), 2.0);
        assert!(matches!(r, Err(Error::CondPQ { t }) if t == 1.0));
    }
}
