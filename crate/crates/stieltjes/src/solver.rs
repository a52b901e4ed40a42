// SPDX-License-Identifier: Apache-2.0
//! First-order and second-order linear Stieltjes initial value problems
//!
//! ```text
//! v''_g + P v'_g + Q v = f,   v(0) = x0,   v'_g(0) = v0
//! ```
//!
//! solved by closed forms (constant coefficients), by factorization into two
//! first-order problems, and by variation of parameters on an arbitrary
//! solution basis.

use std::sync::Arc;

use num_complex::Complex64;

use crate::derivator::{Derivator, PointClass};
use crate::error::{Error, Result};
use crate::gcalculus::{self, RegressiveFn};
use crate::gmeasure::{self, GFunction, Shape};
use crate::mutation::{self, Mutation};
use crate::wronskian::{self, SolutionPair};

type C = Complex64;

const DOUBLE_ROOT_EPS: f64 = 1e-8;
const NONVANISHING_EPS: f64 = 1e-9;
const WRONSKIAN_EPS: f64 = 1e-12;

/// Which formula produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedFormDistinct,
    ClosedFormDouble,
    VarPar,
    Factorization,
    FirstOrder,
    Helmholtz,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedFormDistinct => "closed-form-distinct",
            Method::ClosedFormDouble => "closed-form-double",
            Method::VarPar => "varpar",
            Method::Factorization => "factorization",
            Method::FirstOrder => "first-order",
            Method::Helmholtz => "helmholtz",
        }
    }
}

/// Coefficients, forcing and initial data of a second-order problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: GFunction,
    pub q: GFunction,
    pub f: GFunction,
    pub x0: C,
    pub v0: C,
}

impl ProblemSpec {
    pub fn constant(p: C, q: C, f: GFunction, x0: C, v0: C) -> Self {
        ProblemSpec { p: GFunction::constant(p), q: GFunction::constant(q), f, x0, v0 }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub v: GFunction,
    pub method: Method,
}

fn is_zero_fn(f: &GFunction) -> bool {
    matches!(f.shape(), Shape::Const(c) if *c == C::new(0.0, 0.0)) && f.breaks().is_empty()
}

fn jump_breaks(d: &Derivator, extra: &[&GFunction]) -> Vec<f64> {
    d.jumps().iter().map(|j| j.t).chain(extra.iter().flat_map(|f| f.breaks().iter().copied())).collect()
}

/// Builds a function from value and derivative closures; the derivative
/// closures are evaluated at `t*`.
fn assemble(
    d: &Derivator,
    label: impl Into<String>,
    value: impl Fn(f64) -> C + Send + Sync + 'static,
    d1: impl Fn(f64) -> C + Send + Sync + 'static,
    d2: Option<Arc<dyn Fn(f64) -> C + Send + Sync>>,
    breaks: Vec<f64>,
) -> GFunction {
    let (da, db) = (d.clone(), d.clone());
    let d2 = d2.map(|f| -> Arc<dyn Fn(f64) -> C + Send + Sync> { Arc::new(move |t| f(db.star(t))) });
    GFunction::new(label, value)
        .with_deriv1(move |t| d1(da.star(t)))
        .with_deriv2_arc(d2)
        .with_breaks(breaks)
}

fn regressive_root(d: &Derivator, lambda: C) -> Result<RegressiveFn> {
    RegressiveFn::constant(d, lambda).map_err(|e| match e {
        Error::NotRegressive { t, .. } => Error::Precondition { t, what: format!("1 + λΔg = 0 for root λ = {lambda}") },
        other => other,
    })
}

/// `u'_g = p u + f`, `u(0) = u0`:
/// `u = u0 exp_g(p) + exp_g(p) ∫ exp_g(p)⁻¹ f / (1 + pΔg) dμ_g`.
pub fn solve_first_order(d: &Derivator, p: &GFunction, f: &GFunction, u0: C, n: usize) -> Result<SolutionBundle> {
    let e = gcalculus::exp_gfunction(d, &RegressiveFn::new(d, p.clone())?, n)?;
    let integral = if is_zero_fn(f) {
        GFunction::zero()
    } else {
        let (ee, ff, pp, dd) = (e.clone(), f.clone(), p.clone(), d.clone());
        let h = GFunction::new("e⁻¹f/(1+pΔg)", move |s| ff.eval(s) / (ee.eval(s) * (1.0 + pp.eval(s) * dd.jump(s))))
            .with_breaks(jump_breaks(d, &[f, p]));
        gmeasure::cumulative(d, &h, n)?
    };
    let (e1, i1) = (e.clone(), integral.clone());
    let u = move |t: f64| e1.eval(t) * (u0 + i1.eval(t));
    let (u1, p1, f1) = (u.clone(), p.clone(), f.clone());
    let v = assemble(d, "first-order", u, move |s| p1.eval(s) * u1(s) + f1.eval(s), None, jump_breaks(d, &[f, p]));
    Ok(SolutionBundle { v, method: Method::FirstOrder })
}

/// Roots of `λ² + Pλ + Q`, ordered by real then imaginary part; nearly equal
/// roots collapse to the double root `−P/2`.
pub fn char_roots(p: C, q: C) -> (C, C) {
    let disc = (p * p - 4.0 * q).sqrt();
    // Pick the sign that avoids cancellation in −(P ± √disc)/2.
    let s = if (p.conj() * disc).re >= 0.0 { disc } else { -disc };
    let r1 = -(p + s) / 2.0;
    let r2 = if r1.norm() > 0.0 { q / r1 } else { -p - r1 };
    let scale = 1f64.max(r1.norm()).max(r2.norm());
    if (r1 - r2).norm() < DOUBLE_ROOT_EPS * scale.max(1.0) && (r1 - r2).norm() < DOUBLE_ROOT_EPS {
        let l = -p / 2.0;
        return (l, l);
    }
    let tol = 1e-12 * scale;
    let before = |a: C, b: C| {
        if (a.re - b.re).abs() > tol {
            a.re < b.re
        } else {
            a.im < b.im
        }
    };
    if before(r2, r1) {
        (r2, r1)
    } else {
        (r1, r2)
    }
}

/// Basis of the homogeneous constant-coefficient equation:
/// `(exp_g(λ1), exp_g(λ2))`, or `(exp_g(λ), φ exp_g(λ))` for a double root.
pub fn homogeneous_basis_const(d: &Derivator, p: C, q: C) -> Result<SolutionPair> {
    let (l1, l2) = char_roots(p, q);
    regressive_root(d, l1)?;
    regressive_root(d, l2)?;
    let y1 = gcalculus::exp_const_gfunction(d, l1)?;
    let y2 = if l1 == l2 {
        gcalculus::polynomial_exp_gfunction(d, l1)?
    } else {
        gcalculus::exp_const_gfunction(d, l2)?
    };
    Ok(SolutionPair::new(y1, y2))
}

/// `∫_{[0,t)} exp_g(λ)⁻¹ f / (1 + λΔg) dμ_g` as a prefix function.
fn resolvent_of_forcing(d: &Derivator, e: &GFunction, lambda: C, f: &GFunction, n: usize) -> Result<GFunction> {
    if is_zero_fn(f) {
        return Ok(GFunction::zero());
    }
    let (ee, ff, dd) = (e.clone(), f.clone(), d.clone());
    let h = GFunction::new("e⁻¹f/(1+λΔg)", move |s| ff.eval(s) / (ee.eval(s) * (1.0 + lambda * dd.jump(s))))
        .with_breaks(jump_breaks(d, &[f]));
    gmeasure::cumulative(d, &h, n)
}

/// Constant-coefficient problem by the closed forms for distinct and double
/// characteristic roots.
pub fn solve_const_ivp(d: &Derivator, p: C, q: C, f: &GFunction, x0: C, v0: C, n: usize) -> Result<SolutionBundle> {
    let (l1, l2) = char_roots(p, q);
    regressive_root(d, l1)?;
    regressive_root(d, l2)?;
    let breaks = jump_breaks(d, &[f]);
    if l1 != l2 {
        let (e1, e2) = (gcalculus::exp_const_gfunction(d, l1)?, gcalculus::exp_const_gfunction(d, l2)?);
        let (i1, i2) = (resolvent_of_forcing(d, &e1, l1, f, n)?, resolvent_of_forcing(d, &e2, l2, f, n)?);
        let a = (l2 * x0 - v0) / (l2 - l1);
        let b = (v0 - l1 * x0) / (l2 - l1);
        let k = 1.0 / (l1 - l2);
        let parts = Arc::new(move |t: f64| {
            let (x1, x2) = (e1.eval(t), e2.eval(t));
            (a * x1, b * x2, x1 * i1.eval(t), x2 * i2.eval(t))
        });
        let pv = parts.clone();
        let value = move |t: f64| {
            let (h1, h2, u1, u2) = pv(t);
            h1 + h2 + k * (u1 - u2)
        };
        let pd = parts.clone();
        let d1 = move |s: f64| {
            let (h1, h2, u1, u2) = pd(s);
            l1 * h1 + l2 * h2 + k * (l1 * u1 - l2 * u2)
        };
        let (pd2, ff) = (parts.clone(), f.clone());
        let d2: Arc<dyn Fn(f64) -> C + Send + Sync> = Arc::new(move |s: f64| {
            let (h1, h2, u1, u2) = pd2(s);
            l1 * l1 * h1 + l2 * l2 * h2 + ff.eval(s) + k * (l1 * l1 * u1 - l2 * l2 * u2)
        });
        let v = assemble(d, "closed-form-distinct", value, d1, Some(d2), breaks);
        return Ok(SolutionBundle { v, method: Method::ClosedFormDistinct });
    }

    let l = l1;
    let e = gcalculus::exp_const_gfunction(d, l)?;
    let phi = gcalculus::phi_gfunction(d, &GFunction::constant(C::new(1.0, 0.0)), l, n)?;
    let i = resolvent_of_forcing(d, &e, l, f, n)?;
    let j = if is_zero_fn(f) {
        GFunction::zero()
    } else {
        let (ee, ff, pp, dd) = (e.clone(), f.clone(), phi.clone(), d.clone());
        let h = GFunction::new("e⁻¹[φf/(1+λΔg) + fΔg/(1+λΔg)²]", move |s| {
            let den = 1.0 + l * dd.jump(s);
            let fs = ff.eval(s);
            (pp.eval(s) * fs / den + fs * dd.jump(s) / (den * den)) / ee.eval(s)
        })
        .with_breaks(breaks.clone());
        gmeasure::cumulative(d, &h, n)?
    };
    let c = v0 - l * x0;
    // v = x0 e + c w + u with w = φe, z = I e, u = (φI − J) e.
    let parts = Arc::new(move |t: f64| {
        let (et, pt, it) = (e.eval(t), phi.eval(t), i.eval(t));
        (et, pt * et, it * et, (pt * it - j.eval(t)) * et)
    });
    let pv = parts.clone();
    let value = move |t: f64| {
        let (et, w, _, u) = pv(t);
        x0 * et + c * w + u
    };
    let pd = parts.clone();
    let d1 = move |s: f64| {
        let (et, w, z, u) = pd(s);
        l * x0 * et + c * (et + l * w) + z + l * u
    };
    let (pd2, ff) = (parts.clone(), f.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> = Arc::new(move |s: f64| {
        let (et, w, z, u) = pd2(s);
        l * l * x0 * et + c * (2.0 * l * et + l * l * w) + ff.eval(s) + 2.0 * l * z + l * l * u
    });
    let v = assemble(d, "closed-form-double", value, d1, Some(d2), breaks);
    Ok(SolutionBundle { v, method: Method::ClosedFormDouble })
}

/// Constant-coefficient problem through the factorization
/// `(D − λ1)(D − λ2) v = f`, with the nested integral tabulated.
pub fn solve_const_factorization(d: &Derivator, p: C, q: C, f: &GFunction, x0: C, v0: C, n: usize) -> Result<SolutionBundle> {
    let (l1, l2) = char_roots(p, q);
    regressive_root(d, l1)?;
    regressive_root(d, l2)?;
    let breaks = jump_breaks(d, &[f]);
    let e1 = gcalculus::exp_const_gfunction(d, l1)?;
    let e2 = gcalculus::exp_const_gfunction(d, l2)?;
    // k = exp_g((λ1 − λ2)/(1 + λ2Δg)) / (1 + λ2Δg)
    let dd = d.clone();
    let ratio = GFunction::new("(λ1−λ2)/(1+λ2Δg)", move |s| (l1 - l2) / (1.0 + l2 * dd.jump(s)))
        .with_shape(Shape::Const(l1 - l2));
    let er = gcalculus::exp_gfunction(d, &RegressiveFn::new(d, ratio)?, n)?;
    let dd = d.clone();
    let k = GFunction::new("k", move |s| er.eval(s) / (1.0 + l2 * dd.jump(s))).with_breaks(breaks.clone());
    let big_k = gmeasure::cumulative(d, &k, n)?;
    let m = resolvent_of_forcing(d, &e1, l1, f, n)?;
    let l = if is_zero_fn(f) {
        GFunction::zero()
    } else {
        let (kk, mm) = (k.clone(), m.clone());
        let h = GFunction::new("kM", move |s| kk.eval(s) * mm.eval(s)).with_breaks(breaks.clone());
        gmeasure::cumulative(d, &h, n)?
    };
    let c = v0 - l2 * x0;
    let parts = Arc::new(move |t: f64| {
        let v = e2.eval(t) * (x0 + c * big_k.eval(t) + l.eval(t));
        let v1 = (c + m.eval(t)) * e1.eval(t);
        (v, v1)
    });
    let pv = parts.clone();
    let value = move |t: f64| pv(t).0;
    let pd = parts.clone();
    let d1 = move |s: f64| {
        let (v, v1) = pd(s);
        l2 * v + v1
    };
    let (pd2, ff) = (parts.clone(), f.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> = Arc::new(move |s: f64| {
        let (v, v1) = pd2(s);
        let dv = l2 * v + v1;
        l2 * dv + l1 * v1 + ff.eval(s)
    });
    let v = assemble(d, "factorization", value, d1, Some(d2), breaks);
    Ok(SolutionBundle { v, method: Method::Factorization })
}

fn check_nonvanishing(d: &Derivator, n: usize, what: &str, f: impl Fn(f64) -> Result<C>, eps: f64) -> Result<()> {
    for t in d.grid(n) {
        let v = f(t)?;
        if !(v.norm() > eps) {
            return Err(Error::Precondition { t, what: format!("{what} vanishes") });
        }
    }
    Ok(())
}

/// Second homogeneous solution `y2 = φ y1` with
/// `φ = ∫ exp_g(−P + QΔg) / (y1 (y1 + y1'Δg)) dμ_g`.
pub fn second_homogeneous_solution(d: &Derivator, p: &GFunction, q: &GFunction, y1: &GFunction, n: usize) -> Result<GFunction> {
    let exponent = wronskian::wronskian_exponent(d, p, q)?;
    check_nonvanishing(d, n, "y1", |t| Ok(y1.eval(t)), NONVANISHING_EPS)?;
    check_nonvanishing(d, n, "y1 + y1'Δg", |t| Ok(y1.eval(t) + y1.d1(t)? * d.jump(t)), NONVANISHING_EPS)?;
    y1.d2(0.0)?;
    let wt = gcalculus::exp_gfunction(d, &exponent, n)?;
    let breaks = jump_breaks(d, &[p, q, y1]);
    let (yy, ww, dd) = (y1.clone(), wt.clone(), d.clone());
    let h = GFunction::new("W̃/(y1(y1+y1'Δg))", move |s| {
        let y = yy.eval(s);
        ww.eval(s) / (y * (y + yy.deriv1(s).unwrap() * dd.jump(s)))
    })
    .with_breaks(breaks.clone());
    let phi = gmeasure::cumulative(d, &h, n)?;
    let (y, f) = (y1.clone(), phi.clone());
    let value = move |t: f64| f.eval(t) * y.eval(t);
    let (y, f, w) = (y1.clone(), phi.clone(), wt.clone());
    let d1 = move |s: f64| y.deriv1(s).unwrap() * f.eval(s) + w.eval(s) / y.eval(s);
    let (y, f, w, pp) = (y1.clone(), phi.clone(), wt.clone(), p.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> =
        Arc::new(move |s: f64| y.deriv2(s).unwrap() * f.eval(s) - pp.eval(s) * w.eval(s) / y.eval(s));
    Ok(assemble(d, format!("φ·{}", y1.label()), value, d1, Some(d2), breaks))
}

/// Particular solution `v_p = c1 y1 + c2 y2` with
/// `c1 = ∫ −(y2 + y2'Δg) f / W_g` and `c2 = ∫ (y1 + y1'Δg) f / W_g`.
pub fn particular_solution(d: &Derivator, p: &GFunction, q: &GFunction, f: &GFunction, pair: &SolutionPair, n: usize) -> Result<SolutionBundle> {
    wronskian::check_cond_pq(d, p, q)?;
    let (y1, y2) = (pair.y1.clone(), pair.y2.clone());
    y1.d2(0.0)?;
    y2.d2(0.0)?;
    if is_zero_fn(f) {
        let z = GFunction::zero();
        return Ok(SolutionBundle { v: z, method: Method::VarPar });
    }
    check_nonvanishing(d, n, "g-Wronskian", |t| wronskian::wronskian_g(d, pair, t), WRONSKIAN_EPS)?;
    let breaks = jump_breaks(d, &[f, p, q, &y1, &y2]);
    let sign = if mutation::active(Mutation::DefC1SignFlip) { 1.0 } else { -1.0 };
    let (pr, ff, dd) = (pair.clone(), f.clone(), d.clone());
    let h1 = GFunction::new("c1'", move |s| {
        let w = wronskian::wronskian_g(&dd, &pr, s).unwrap();
        sign * (pr.y2.eval(s) + pr.y2.deriv1(s).unwrap() * dd.jump(s)) * ff.eval(s) / w
    })
    .with_breaks(breaks.clone());
    let (pr, ff, dd) = (pair.clone(), f.clone(), d.clone());
    let h2 = GFunction::new("c2'", move |s| {
        let w = wronskian::wronskian_g(&dd, &pr, s).unwrap();
        (pr.y1.eval(s) + pr.y1.deriv1(s).unwrap() * dd.jump(s)) * ff.eval(s) / w
    })
    .with_breaks(breaks.clone());
    let c1 = gmeasure::cumulative(d, &h1, n)?;
    let c2 = gmeasure::cumulative(d, &h2, n)?;
    let coeffs = Arc::new(move |t: f64| (c1.eval(t), c2.eval(t)));
    let (cc, a, b) = (coeffs.clone(), y1.clone(), y2.clone());
    let value = move |t: f64| {
        let (k1, k2) = cc(t);
        k1 * a.eval(t) + k2 * b.eval(t)
    };
    let (cc, a, b) = (coeffs.clone(), y1.clone(), y2.clone());
    let d1 = move |s: f64| {
        let (k1, k2) = cc(s);
        k1 * a.deriv1(s).unwrap() + k2 * b.deriv1(s).unwrap()
    };
    let (cc, a, b, ff) = (coeffs.clone(), y1.clone(), y2.clone(), f.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> = Arc::new(move |s: f64| {
        let (k1, k2) = cc(s);
        k1 * a.deriv2(s).unwrap() + k2 * b.deriv2(s).unwrap() + ff.eval(s)
    });
    Ok(SolutionBundle { v: assemble(d, "particular", value, d1, Some(d2), breaks), method: Method::VarPar })
}

/// Coefficients of the homogeneous combination `c1 y1 + c2 y2` matching the
/// initial data.
pub fn homogeneous_coefficients(pair: &SolutionPair, x0: C, v0: C) -> Result<(C, C)> {
    let (a0, a1) = (pair.y1.eval(0.0), pair.y1.d1(0.0)?);
    let (b0, b1) = (pair.y2.eval(0.0), pair.y2.d1(0.0)?);
    let w0 = a0 * b1 - b0 * a1;
    let scale = 1f64.max(a0.norm().max(a1.norm()) * b0.norm().max(b1.norm()));
    if !(w0.norm() > WRONSKIAN_EPS * scale) {
        return Err(Error::Precondition { t: 0.0, what: "W̃(0) = 0: basis not independent at 0".into() });
    }
    Ok(((x0 * b1 - v0 * b0) / w0, (v0 * a0 - x0 * a1) / w0))
}

/// Full solution `v = v_p + c1 y1 + c2 y2` by variation of parameters.
pub fn solve_ivp(d: &Derivator, spec: &ProblemSpec, pair: &SolutionPair, n: usize) -> Result<SolutionBundle> {
    let (c1, c2) = homogeneous_coefficients(pair, spec.x0, spec.v0)?;
    let vp = particular_solution(d, &spec.p, &spec.q, &spec.f, pair, n)?.v;
    let (a, b, p) = (pair.y1.clone(), pair.y2.clone(), vp.clone());
    let value = move |t: f64| p.eval(t) + c1 * a.eval(t) + c2 * b.eval(t);
    let (a, b, p) = (pair.y1.clone(), pair.y2.clone(), vp.clone());
    let d1 = move |s: f64| p.deriv1(s).unwrap() + c1 * a.deriv1(s).unwrap() + c2 * b.deriv1(s).unwrap();
    let (a, b, p) = (pair.y1.clone(), pair.y2.clone(), vp.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> =
        Arc::new(move |s: f64| p.deriv2(s).unwrap() + c1 * a.deriv2(s).unwrap() + c2 * b.deriv2(s).unwrap());
    let breaks = jump_breaks(d, &[&spec.f, &spec.p, &spec.q, &pair.y1, &pair.y2]);
    Ok(SolutionBundle { v: assemble(d, "varpar", value, d1, Some(d2), breaks), method: Method::VarPar })
}

/// `v''_g + P v'_g = f` solved through `w = v'_g`:
/// `v = x0 + v0 ∫ exp_g(−P) + ∫_{[0,t)} exp_g(−P; s) ∫_{[0,s)} exp_g(−P)⁻¹ f/(1 − PΔg) dμ_g dμ_g(s)`.
pub fn solve_q_zero_closed_form(d: &Derivator, p: &GFunction, f: &GFunction, x0: C, v0: C, n: usize) -> Result<SolutionBundle> {
    let pp = p.clone();
    let minus_p = GFunction::new("−P", move |s| -pp.eval(s)).with_shape(p.shape().map(|x| -x)).with_breaks(p.breaks().iter().copied());
    let e = gcalculus::exp_gfunction(d, &RegressiveFn::new(d, minus_p)?, n)?;
    let y2 = gmeasure::cumulative(d, &e, n)?;
    let breaks = jump_breaks(d, &[p, f]);
    let (ee, ff, pp, dd) = (e.clone(), f.clone(), p.clone(), d.clone());
    let inner = GFunction::new("e⁻¹f/(1−PΔg)", move |u| ff.eval(u) / (ee.eval(u) * (1.0 - pp.eval(u) * dd.jump(u))))
        .with_breaks(breaks.clone());
    let inner = gmeasure::cumulative(d, &inner, n)?;
    let (ee, ii) = (e.clone(), inner.clone());
    let outer = GFunction::new("e·∫", move |s| ee.eval(s) * ii.eval(s)).with_breaks(breaks.clone());
    let outer = gmeasure::cumulative(d, &outer, n)?;
    let (yy, oo) = (y2.clone(), outer.clone());
    let value = move |t: f64| x0 + v0 * yy.eval(t) + oo.eval(t);
    // v' = w = v0 e + e ∫ e⁻¹ f/(1 − PΔg)
    let (ee, ii) = (e.clone(), inner.clone());
    let d1 = move |s: f64| ee.eval(s) * (v0 + ii.eval(s));
    let (ee, ii, pp, ff) = (e.clone(), inner.clone(), p.clone(), f.clone());
    let d2: Arc<dyn Fn(f64) -> C + Send + Sync> =
        Arc::new(move |s: f64| -pp.eval(s) * ee.eval(s) * (v0 + ii.eval(s)) + ff.eval(s));
    Ok(SolutionBundle { v: assemble(d, "q-zero", value, d1, Some(d2), breaks), method: Method::FirstOrder })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    /// Use the analytic derivatives carried by the solution.
    Analytic,
    /// Differentiate numerically: `v'` from `v`, `v''` from the analytic `v'`
    /// (or from the numeric `v'` when no analytic one exists).
    Numeric,
}

/// `|v'' + P v' + Q v − f|` at `t`.
pub fn residual_at(d: &Derivator, sol: &SolutionBundle, spec: &ProblemSpec, t: f64, mode: ResidualMode) -> Result<f64> {
    let v = &sol.v;
    let (dv, ddv) = match mode {
        ResidualMode::Analytic => {
            let dv = match v.deriv1(t) {
                Some(x) => x,
                None => gcalculus::g_derivative_numeric(d, v, t)?,
            };
            (dv, gcalculus::g_derivative2(d, v, t)?.0)
        }
        ResidualMode::Numeric => {
            let dv = gcalculus::g_derivative_numeric(d, &v.value_only(), t)?;
            let ddv = match v.first_derivative() {
                Some(first) => gcalculus::g_derivative_numeric(d, &first.value_only(), t)?,
                None => gcalculus::g_derivative2(d, &v.value_only(), t)?.0,
            };
            (dv, ddv)
        }
    };
    let s = d.star(t);
    Ok((ddv + spec.p.eval(s) * dv + spec.q.eval(s) * v.eval(s) - spec.f.eval(s)).norm())
}

/// Maximum residual over `d.grid(n)`; interiors of constancy intervals are
/// represented by their right endpoints, which are grid points.
pub fn residual(d: &Derivator, sol: &SolutionBundle, spec: &ProblemSpec, n: usize, mode: ResidualMode) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in d.grid(n) {
        if matches!(d.classify(t), PointClass::Constancy(..)) {
            continue;
        }
        let r = residual_at(d, sol, spec, t, mode)?;
        if !r.is_finite() {
            return Err(Error::NonFinite { t });
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Largest disagreement between analytic derivatives and numeric derivatives
/// of `v` (first) and of the analytic `v'` (second) over the grid.
pub fn derivative_consistency(d: &Derivator, v: &GFunction, n: usize) -> Result<f64> {
    let first = v.first_derivative().ok_or_else(|| Error::Contract("no analytic derivative".into()))?;
    let mut worst = 0.0_f64;
    for t in d.grid(n) {
        if matches!(d.classify(t), PointClass::Constancy(..)) {
            continue;
        }
        let a = (v.d1(t)? - gcalculus::g_derivative_numeric(d, &v.value_only(), t)?).norm();
        worst = worst.max(a);
        if let Some(second) = v.deriv2(t) {
            worst = worst.max((second - gcalculus::g_derivative_numeric(d, &first.value_only(), t)?).norm());
        }
    }
    Ok(worst)
}

/// Left-continuous piecewise-constant coefficient: `(until, value)` segments,
/// the value applying on `(previous until, until]`. Breakpoints inside
/// `(0, T)` must be jumps of `g`, otherwise the coefficient would not be
/// g-continuous.
pub fn piecewise_const(d: &Derivator, segs: &[(f64, C)]) -> Result<GFunction> {
    if segs.is_empty() {
        return Err(Error::Contract("piecewise coefficient without segments".into()));
    }
    for w in segs.windows(2) {
        if !(w[0].0 < w[1].0) {
            return Err(Error::Contract("piecewise segments must have increasing ends".into()));
        }
    }
    let last = segs[segs.len() - 1].0;
    if last < d.t_end() {
        return Err(Error::Contract(format!("piecewise coefficient ends at {last} before T = {}", d.t_end())));
    }
    let mut segs = segs.to_vec();
    segs.last_mut().unwrap().0 = f64::INFINITY;
    for &(u, _) in &segs[..segs.len() - 1] {
        if !d.is_jump(u) {
            return Err(Error::Precondition { t: u, what: "coefficient break is not a jump of g".into() });
        }
    }
    let cuts: Vec<f64> = segs[..segs.len() - 1].iter().map(|s| s.0).collect();
    let table = Arc::new(segs.clone());
    let tv = table.clone();
    let value = move |t: f64| tv.iter().find(|s| t <= s.0).unwrap().1;
    let step = {
        let (tv, dd) = (table.clone(), d.clone());
        move |t: f64| -> C {
            match tv.iter().position(|s| s.0 == t) {
                Some(i) if i + 1 < tv.len() => (tv[i + 1].1 - tv[i].1) / dd.jump(t),
                _ => C::new(0.0, 0.0),
            }
        }
    };
    let (s1, s2, dd) = (step.clone(), step, d.clone());
    Ok(GFunction::new("piecewise", value)
        .with_deriv1(move |t| s1(dd.star(t)))
        .with_deriv2({
            let dd = d.clone();
            move |t| {
                let s = dd.star(t);
                -s2(s) / dd.jump(s).max(f64::MIN_POSITIVE)
            }
        })
        .with_shape(Shape::Piecewise(segs))
        .with_breaks(cuts))
}

#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    roots: (C, C),
    double: bool,
    /// Coefficients of the two basis functions on this segment.
    coef: [(C, C); 2],
}

/// Homogeneous basis for piecewise-constant `P`, `Q`, built segment by segment
/// from exponentials anchored at each coefficient switch and matched through
/// `y(s+) = y(s) + y'(s)Δg(s)`, `y'(s+) = y'(s) + y''(s)Δg(s)`.
#[derive(Debug, Clone)]
struct Spliced {
    d: Derivator,
    segs: Vec<Segment>,
}

impl Spliced {
    fn segment(&self, t: f64) -> &Segment {
        // Segment k covers (start_k, start_{k+1}]; the first also holds 0.
        self.segs.iter().rev().find(|s| t > s.start).unwrap_or(&self.segs[0])
    }

    fn anchored(&self, lambda: C, s: f64, t: f64) -> C {
        let d = &self.d;
        let logs: C = d.jumps().iter().filter(|j| j.t > s && j.t < t).map(|j| (1.0 + lambda * j.d).ln()).sum();
        (lambda * (d.g_continuous(t) - d.g_continuous(s)) + logs).exp()
    }

    fn anchored_phi(&self, lambda: C, s: f64, t: f64) -> C {
        let d = &self.d;
        let jumps: C = d.jumps().iter().filter(|j| j.t > s && j.t < t).map(|j| j.d / (1.0 + lambda * j.d)).sum();
        (d.g_continuous(t) - d.g_continuous(s)) + jumps
    }

    /// `(y, y', y'')` of basis function `k` on its segment's formula.
    fn eval_on(&self, seg: &Segment, k: usize, t: f64) -> [C; 3] {
        let (a, b) = seg.coef[k];
        let (l1, l2) = seg.roots;
        if seg.double {
            let e = self.anchored(l1, seg.start, t);
            let w = self.anchored_phi(l1, seg.start, t) * e;
            [a * e + b * w, a * l1 * e + b * (e + l1 * w), a * l1 * l1 * e + b * (2.0 * l1 * e + l1 * l1 * w)]
        } else {
            let (e1, e2) = (self.anchored(l1, seg.start, t), self.anchored(l2, seg.start, t));
            [a * e1 + b * e2, a * l1 * e1 + b * l2 * e2, a * l1 * l1 * e1 + b * l2 * l2 * e2]
        }
    }

    fn eval(&self, k: usize, t: f64) -> [C; 3] {
        let t = if t == 0.0 { t } else { self.d.star(t) };
        self.eval_on(self.segment(t), k, t)
    }
}

/// Basis of `v'' + P v' + Q v = 0` for piecewise-constant `P`, `Q` whose
/// breakpoints are jumps of `g`.
pub fn homogeneous_basis_piecewise(d: &Derivator, p: &GFunction, q: &GFunction) -> Result<SolutionPair> {
    wronskian::check_cond_pq(d, p, q)?;
    let mut starts: Vec<f64> = p.breaks().iter().chain(q.breaks()).copied().filter(|&b| b > 0.0 && b < d.t_end()).collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    for &b in &starts {
        if !d.is_jump(b) {
            return Err(Error::Precondition { t: b, what: "coefficient break is not a jump of g".into() });
        }
    }
    let mut bounds = vec![0.0];
    bounds.extend(starts.iter().copied());
    let mut sp = Spliced { d: d.clone(), segs: Vec::new() };
    for (i, &s) in bounds.iter().enumerate() {
        let end = bounds.get(i + 1).copied().unwrap_or(d.t_end());
        // Sample the coefficients strictly inside the segment.
        let probe = if i + 1 < bounds.len() { end } else { 0.5 * (s + end) };
        let (pc, qc) = (p.eval(probe), q.eval(probe));
        let (l1, l2) = char_roots(pc, qc);
        for j in d.jumps().iter().filter(|j| (j.t > s || (i == 0 && j.t >= s)) && j.t <= end) {
            for l in [l1, l2] {
                if !((1.0 + l * j.d).norm() > 1e-12) {
                    return Err(Error::Precondition { t: j.t, what: format!("1 + λΔg = 0 for root λ = {l}") });
                }
            }
        }
        let double = l1 == l2;
        let coef = if i == 0 {
            [(C::new(1.0, 0.0), C::new(0.0, 0.0)), (C::new(0.0, 0.0), C::new(1.0, 0.0))]
        } else {
            let prev = sp.segs.last().unwrap().clone();
            let dg = d.jump(s);
            let (pl, ql) = (p.eval(s), q.eval(s));
            let mut coef = [(C::new(0.0, 0.0), C::new(0.0, 0.0)); 2];
            for (k, slot) in coef.iter_mut().enumerate() {
                let [y, dy, _] = sp.eval_on(&prev, k, s);
                let ddy = -pl * dy - ql * y;
                let (y0, y1) = (y + dy * dg, dy + ddy * dg);
                *slot = if double { (y0, y1 - l1 * y0) } else { ((l2 * y0 - y1) / (l2 - l1), (y1 - l1 * y0) / (l2 - l1)) };
            }
            coef
        };
        sp.segs.push(Segment { start: s, roots: (l1, l2), double, coef });
    }
    let sp = Arc::new(sp);
    let breaks = jump_breaks(d, &[p, q]);
    let make = |k: usize| {
        let (a, b, c) = (sp.clone(), sp.clone(), sp.clone());
        GFunction::new(format!("spliced y{}", k + 1), move |t| a.eval(k, t)[0])
            .with_deriv1(move |t| b.eval(k, t)[1])
            .with_deriv2(move |t| c.eval(k, t)[2])
            .with_breaks(breaks.clone())
    };
    Ok(SolutionPair::new(make(0), make(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn e1() -> Derivator {
        Derivator::with_jumps(3.0, &[(1.0, 0.5)])
    }

    #[test]
    fn roots() {
        assert_eq!(char_roots(c(0.0), c(1.0)), (C::new(0.0, -1.0), C::new(0.0, 1.0)));
        assert_eq!(char_roots(c(2.0), c(1.0)), (c(-1.0), c(-1.0)));
        let (a, b) = char_roots(c(3.0), c(2.0));
        assert!((a - c(-2.0)).norm() < 1e-15 && (b - c(-1.0)).norm() < 1e-15);
        let (a, b) = char_roots(c(1.0), c(1.0));
        assert!(a.im < 0.0 && b.im > 0.0);
    }

    #[test]
    fn first_order_examples() {
        let d = e1();
        let u = solve_first_order(&d, &GFunction::zero(), &GFunction::zero(), C::new(2.0, 1.0), 64).unwrap();
        assert_eq!(u.v.eval(2.3), C::new(2.0, 1.0));
        let u = solve_first_order(&d, &GFunction::constant(c(1.0)), &GFunction::zero(), c(2.0), 64).unwrap();
        assert!((u.v.eval(2.0) - c(2.0 * 2f64.exp() * 1.5)).norm() < 1e-12);
        let id = Derivator::identity(2.0);
        let u = solve_first_order(&id, &GFunction::constant(c(-1.0)), &GFunction::constant(c(1.0)), c(0.0), 256).unwrap();
        for t in [0.5, 1.0, 2.0] {
            assert!((u.v.eval(t) - c(1.0 - (-t).exp())).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_examples() {
        let id = Derivator::identity(3.0);
        let pair = homogeneous_basis_const(&id, c(0.0), c(1.0)).unwrap();
        assert!((pair.y1.eval(1.0) - C::new(0.0, -1.0).exp()).norm() < 1e-14);
        assert!((pair.y2.eval(1.0) - C::new(0.0, 1.0).exp()).norm() < 1e-14);
        let pair = homogeneous_basis_const(&id, c(2.0), c(1.0)).unwrap();
        assert!((pair.y2.eval(1.5) - c(1.5 * (-1.5f64).exp())).norm() < 1e-14);
        let pair = homogeneous_basis_const(&e1(), c(2.0), c(1.0));
        // λ = −1 with Δg = 0.5 is regressive; y2(2) = 3 e^{-2} · 0.5.
        let pair = pair.unwrap();
        assert!((pair.y2.eval(2.0) - c(3.0 * (-2f64).exp() * 0.5)).norm() < 1e-14);
        let bad = homogeneous_basis_const(&Derivator::with_jumps(3.0, &[(1.0, 1.0)]), c(2.0), c(1.0));
        assert!(matches!(bad, Err(Error::Precondition { t, .. }) if t == 1.0));
    }

    #[test]
    fn const_ivp_examples() {
        let id = Derivator::identity(3.0);
        let s = solve_const_ivp(&id, c(0.0), c(1.0), &GFunction::zero(), c(1.0), c(0.0), 256).unwrap();
        assert_eq!(s.method, Method::ClosedFormDistinct);
        for t in [0.0, 1.0, 3.0] {
            assert!((s.v.eval(t) - c(t.cos())).norm() < 1e-14);
        }
        let d = e1();
        let s = solve_const_ivp(&d, c(0.0), c(0.0), &GFunction::zero(), c(1.0), c(1.0), 256).unwrap();
        assert_eq!(s.method, Method::ClosedFormDouble);
        assert!((s.v.eval(2.0) - c(3.5)).norm() < 1e-13);
        let s = solve_const_ivp(&id, c(2.0), c(1.0), &GFunction::constant(c(1.0)), c(0.0), c(0.0), 256).unwrap();
        for t in [0.5f64, 2.0, 3.0] {
            let exact = 1.0 - (-t).exp() - t * (-t).exp();
            assert!((s.v.eval(t) - c(exact)).norm() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn factorization_matches_closed_form() {
        let d = Derivator::with_jumps(3.0, &[(1.0, 0.4), (2.2, 0.3)]);
        let f = GFunction::real("cos", f64::cos);
        for (p, q) in [(c(3.0), c(2.0)), (c(0.2), c(1.0)), (c(2.0), c(1.0))] {
            let a = solve_const_ivp(&d, p, q, &f, c(1.0), c(-0.5), 512).unwrap();
            let b = solve_const_factorization(&d, p, q, &f, c(1.0), c(-0.5), 512).unwrap();
            for t in d.grid(64) {
                assert!((a.v.eval(t) - b.v.eval(t)).norm() < 1e-9, "P={p} t={t}");
                assert!((a.v.d1(t).unwrap() - b.v.d1(t).unwrap()).norm() < 1e-9);
            }
        }
        let (l1, l2) = char_roots(c(3.0), c(2.0));
        let b = solve_const_factorization(&d, c(3.0), c(2.0), &GFunction::zero(), c(1.0), l2, 64).unwrap();
        let e = gcalculus::exp_const_gfunction(&d, l2).unwrap();
        assert!((b.v.eval(2.5) - e.eval(2.5)).norm() < 1e-14);
        let _ = l1;
    }

    #[test]
    fn reduction_of_order_classical() {
        let id = Derivator::identity(1.0);
        let y1 = GFunction::real("cos", f64::cos).with_deriv1(|t| c(-t.sin())).with_deriv2(|t| c(-t.cos()));
        let y2 = second_homogeneous_solution(&id, &GFunction::zero(), &GFunction::constant(c(1.0)), &y1, 256).unwrap();
        for t in [0.2, 0.7, 1.0] {
            assert!((y2.eval(t) - c(t.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn particular_classical() {
        let id = Derivator::identity(3.0);
        let pair = SolutionPair::new(
            GFunction::real("cos", f64::cos).with_deriv1(|t| c(-t.sin())).with_deriv2(|t| c(-t.cos())),
            GFunction::real("sin", f64::sin).with_deriv1(|t| c(t.cos())).with_deriv2(|t| c(-t.sin())),
        );
        let (p, q) = (GFunction::zero(), GFunction::constant(c(1.0)));
        let vp = particular_solution(&id, &p, &q, &GFunction::constant(c(1.0)), &pair, 256).unwrap();
        for t in [0.0, 1.0, 3.0] {
            assert!((vp.v.eval(t) - c(1.0 - t.cos())).norm() < 1e-12);
        }
        let z = particular_solution(&id, &p, &q, &GFunction::zero(), &pair, 256).unwrap();
        assert_eq!(z.v.eval(2.0), c(0.0));
    }

    #[test]
    fn ivp_recovers_basis_element() {
        let d = e1();
        let pair = homogeneous_basis_const(&d, c(0.5), c(2.0)).unwrap();
        let spec = ProblemSpec::constant(c(0.5), c(2.0), GFunction::zero(), pair.y1.eval(0.0), pair.y1.d1(0.0).unwrap());
        let s = solve_ivp(&d, &spec, &pair, 64).unwrap();
        for t in d.grid(32) {
            assert!((s.v.eval(t) - pair.y1.eval(t)).norm() < 1e-10);
        }
    }

    #[test]
    fn residual_detects_perturbation() {
        let d = e1();
        let spec = ProblemSpec::constant(c(0.0), c(1.0), GFunction::constant(c(1.0)), c(1.0), c(0.0));
        let sol = solve_const_ivp(&d, c(0.0), c(1.0), &spec.f, spec.x0, spec.v0, 256).unwrap();
        assert!(residual(&d, &sol, &spec, 256, ResidualMode::Analytic).unwrap() < 1e-9);
        assert!(residual(&d, &sol, &spec, 128, ResidualMode::Numeric).unwrap() < 1e-6);
        let v = sol.v.clone();
        let bumped = SolutionBundle { v: GFunction::new("bumped", move |t| v.eval(t) + 1e-3 * t * t), method: sol.method };
        assert!(residual(&d, &bumped, &spec, 64, ResidualMode::Numeric).unwrap() > 1e-4);
        let wrong = ProblemSpec { f: GFunction::constant(c(2.0)), ..spec.clone() };
        assert!(residual(&d, &sol, &wrong, 64, ResidualMode::Analytic).unwrap() >= 0.99);
    }

    #[test]
    fn piecewise_coefficient_derivatives() {
        let d = e1();
        let p = piecewise_const(&d, &[(1.0, c(1.0)), (3.0, c(2.0))]).unwrap();
        assert_eq!(p.eval(1.0), c(1.0));
        assert_eq!(p.eval(1.0001), c(2.0));
        assert_eq!(p.deriv1(1.0).unwrap(), c(2.0));
        assert_eq!(p.deriv1(2.0).unwrap(), c(0.0));
        assert!(matches!(piecewise_const(&d, &[(1.5, c(1.0)), (3.0, c(2.0))]), Err(Error::Precondition { .. })));
    }

    #[test]
    fn spliced_basis_reduces_to_constant_basis() {
        let d = Derivator::with_jumps(3.0, &[(1.0, 0.5), (2.0, 0.25)]);
        let p = piecewise_const(&d, &[(1.0, c(0.3)), (3.0, c(0.3))]).unwrap();
        let q = piecewise_const(&d, &[(1.0, c(2.0)), (3.0, c(2.0))]).unwrap();
        let sp = homogeneous_basis_piecewise(&d, &p, &q).unwrap();
        let cb = homogeneous_basis_const(&d, c(0.3), c(2.0)).unwrap();
        for t in d.grid(64) {
            assert!((sp.y1.eval(t) - cb.y1.eval(t)).norm() < 1e-12, "t={t}");
            assert!((sp.y2.d1(t).unwrap() - cb.y2.d1(t).unwrap()).norm() < 1e-12);
            assert!((sp.y2.d2(t).unwrap() - cb.y2.d2(t).unwrap()).norm() < 1e-12);
        }
    }
}
