// SPDX-License-Identifier: Apache-2.0
//! g-derivatives, the g-exponential and the resolvent-type integrals built on it.

use std::sync::Arc;

use num_complex::Complex64;

use crate::derivator::{Derivator, PointClass};
use crate::error::{Error, Result};
use crate::gmeasure::{self, GFunction, Shape};
use crate::mutation::{self, Mutation};

type C = Complex64;

const ONE_SIDED_LEVELS: usize = 6;
const SYMMETRIC_LEVELS: usize = 4;
/// Smallest g-increment accepted in a difference quotient.
const MIN_G_STEP: f64 = 1e-9;
const REGRESSIVE_EPS: f64 = 1e-12;

/// How a second derivative was obtained, with the accuracy to expect from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    /// Numeric derivative of an analytic first derivative.
    Numeric,
    /// Numeric derivative of a numeric derivative.
    NumericNested,
}

impl DerivativeSource {
    pub fn tolerance(self) -> f64 {
        match self {
            DerivativeSource::Analytic => 1e-10,
            DerivativeSource::Numeric => 1e-6,
            DerivativeSource::NumericNested => 1e-4,
        }
    }
}

/// Richardson extrapolation of `q(h)` to `h = 0` along `h0 / 2^k`.
/// `p` is the step of the error expansion: 1 for `h, h², …`, 2 for `h², h⁴, …`.
fn extrapolate(samples: &[C], p: i32) -> C {
    let mut row: Vec<C> = samples.to_vec();
    let mut factor = 1.0;
    for _ in 1..samples.len() {
        factor *= 2f64.powi(p);
        row = row.windows(2).map(|w| w[1] + (w[1] - w[0]) / (factor - 1.0)).collect();
    }
    row[0]
}

fn local_clearance_right(d: &Derivator, f: &GFunction, t: f64) -> f64 {
    f.breaks().iter().filter(|&&s| s > t).map(|s| s - t).fold(d.clearance_right(t), f64::min)
}

fn local_clearance_left(d: &Derivator, f: &GFunction, t: f64) -> f64 {
    f.breaks().iter().filter(|&&s| s < t).map(|s| t - s).fold(d.clearance_left(t), f64::min)
}

fn initial_step(d: &Derivator, room: f64) -> f64 {
    (0.02 * d.t_end()).min(0.5 * room)
}

/// `lim_{h→0+} f(t + h)`, by polynomial extrapolation in `h`.
pub fn right_limit(d: &Derivator, f: &GFunction, t: f64) -> C {
    let h0 = initial_step(d, local_clearance_right(d, f, t));
    if !(h0 > 0.0) {
        return f.eval(t);
    }
    let samples: Vec<C> = (0..ONE_SIDED_LEVELS).map(|k| f.eval(t + h0 / 2f64.powi(k as i32))).collect();
    extrapolate(&samples, 1)
}

/// `lim_{h→0+} f(t - h)`.
pub fn left_limit(d: &Derivator, f: &GFunction, t: f64) -> C {
    let h0 = initial_step(d, local_clearance_left(d, f, t));
    if !(h0 > 0.0) {
        return f.eval(t);
    }
    let samples: Vec<C> = (0..ONE_SIDED_LEVELS).map(|k| f.eval(t - h0 / 2f64.powi(k as i32))).collect();
    extrapolate(&samples, 1)
}

fn quotient_levels(
    t: f64,
    h0: f64,
    levels: usize,
    dg: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> C,
) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(levels);
    for k in 0..levels {
        let h = h0 / 2f64.powi(k as i32);
        let den = dg(h);
        if !(den >= MIN_G_STEP) {
            break;
        }
        out.push(df(h) / den);
    }
    if out.is_empty() {
        return Err(Error::DerivativeUndefined { t, reason: "g has no admissible variation near t".into() });
    }
    Ok(out)
}

fn right_quotient(d: &Derivator, f: &GFunction, t: f64) -> Result<C> {
    let h0 = initial_step(d, local_clearance_right(d, f, t));
    if !(h0 > 0.0) {
        return Err(Error::DerivativeUndefined { t, reason: "no room to the right".into() });
    }
    let (gt, ft) = (d.g_right(t), f.eval(t));
    let q = quotient_levels(t, h0, ONE_SIDED_LEVELS, |h| d.g(t + h) - gt, |h| f.eval(t + h) - ft)?;
    Ok(extrapolate(&q, 1))
}

fn left_quotient(d: &Derivator, f: &GFunction, t: f64) -> Result<C> {
    let h0 = initial_step(d, local_clearance_left(d, f, t));
    if !(h0 > 0.0) {
        return Err(Error::DerivativeUndefined { t, reason: "no room to the left".into() });
    }
    let (gt, ft) = (d.g(t), f.eval(t));
    let q = quotient_levels(t, h0, ONE_SIDED_LEVELS, |h| gt - d.g(t - h), |h| ft - f.eval(t - h))?;
    Ok(extrapolate(&q, 1))
}

fn symmetric_quotient(d: &Derivator, f: &GFunction, t: f64) -> Result<C> {
    let room = local_clearance_right(d, f, t).min(local_clearance_left(d, f, t));
    let h0 = initial_step(d, room);
    if !(h0 > 0.0) {
        return Err(Error::DerivativeUndefined { t, reason: "no room around t".into() });
    }
    let q = quotient_levels(t, h0, SYMMETRIC_LEVELS, |h| d.g(t + h) - d.g(t - h), |h| f.eval(t + h) - f.eval(t - h))?;
    Ok(extrapolate(&q, 2))
}

/// Numeric g-derivative, ignoring any analytic derivative carried by `f`.
pub fn g_derivative_numeric(d: &Derivator, f: &GFunction, t: f64) -> Result<C> {
    if !d.contains(t) {
        return Err(Error::Domain { t, t_end: d.t_end() });
    }
    let t = d.star(t);
    let dg = d.jump(t);
    if dg > 0.0 {
        return Ok((right_limit(d, f, t) - f.eval(t)) / dg);
    }
    match d.classify(t) {
        PointClass::NgMinus => left_quotient(d, f, t),
        PointClass::NgPlus => right_quotient(d, f, t),
        _ if t == 0.0 => right_quotient(d, f, t),
        _ if t == d.t_end() => left_quotient(d, f, t),
        // Kinks of g or of f: one-sided from the right, where `f` and `g`
        // are smooth together.
        _ if !d.smooth_at(t) || f.breaks().contains(&t) => right_quotient(d, f, t),
        _ => symmetric_quotient(d, f, t),
    }
}

/// g-derivative of `f` at `t`; the analytic derivative is used when present.
pub fn g_derivative(d: &Derivator, f: &GFunction, t: f64) -> Result<C> {
    if !d.contains(t) {
        return Err(Error::Domain { t, t_end: d.t_end() });
    }
    match f.deriv1(t) {
        Some(v) => Ok(v),
        None => g_derivative_numeric(d, f, t),
    }
}

/// Numeric g-derivative as a function (NaN where it is undefined).
pub fn numeric_derivative_fn(d: &Derivator, f: &GFunction) -> GFunction {
    let (dd, ff) = (d.clone(), f.value_only());
    GFunction::new(format!("D{}", f.label()), move |t| {
        g_derivative_numeric(&dd, &ff, t).unwrap_or(C::new(f64::NAN, f64::NAN))
    })
    .with_breaks(f.breaks().iter().copied())
}

/// Second g-derivative with its provenance.
pub fn g_derivative2(d: &Derivator, f: &GFunction, t: f64) -> Result<(C, DerivativeSource)> {
    if let Some(v) = f.deriv2(t) {
        return Ok((v, DerivativeSource::Analytic));
    }
    if let Some(first) = f.first_derivative() {
        return Ok((g_derivative_numeric(d, &first.value_only(), t)?, DerivativeSource::Numeric));
    }
    let inner = numeric_derivative_fn(d, f);
    Ok((g_derivative_numeric(d, &inner, t)?, DerivativeSource::NumericNested))
}

/// `|(f1 f2)'_g − [f1' f2(t*) + f2' f1(t*) + f1' f2' Δg(t*)]|`, with the left
/// side differentiated numerically.
pub fn product_rule_residual(d: &Derivator, f1: &GFunction, f2: &GFunction, t: f64) -> Result<f64> {
    let (a1, b1) = (f1.d1(t)?, f2.d1(t)?);
    let (a, b) = (f1.clone(), f2.clone());
    let prod = GFunction::new("product", move |s| a.eval(s) * b.eval(s))
        .with_breaks(f1.breaks().iter().chain(f2.breaks()).copied());
    let lhs = g_derivative_numeric(d, &prod, t)?;
    let ts = d.star(t);
    let rhs = a1 * f2.eval(ts) + b1 * f1.eval(ts) + a1 * b1 * d.jump(ts);
    Ok((lhs - rhs).norm())
}

/// Quotient-rule analogue of [`product_rule_residual`].
pub fn quotient_rule_residual(d: &Derivator, f1: &GFunction, f2: &GFunction, t: f64) -> Result<f64> {
    let (a1, b1) = (f1.d1(t)?, f2.d1(t)?);
    let ts = d.star(t);
    let den = f2.eval(ts) * (f2.eval(ts) + b1 * d.jump(ts));
    if den.norm() == 0.0 {
        return Err(Error::Precondition { t, what: "quotient denominator vanishes".into() });
    }
    let (a, b) = (f1.clone(), f2.clone());
    let quot = GFunction::new("quotient", move |s| a.eval(s) / b.eval(s))
        .with_breaks(f1.breaks().iter().chain(f2.breaks()).copied());
    let lhs = g_derivative_numeric(d, &quot, t)?;
    let rhs = (a1 * f2.eval(ts) - f1.eval(ts) * b1) / den;
    Ok((lhs - rhs).norm())
}

/// A coefficient `p` with `1 + p(t_j)Δg(t_j) ≠ 0` at every jump.
#[derive(Debug, Clone)]
pub struct RegressiveFn {
    p: GFunction,
    margin: f64,
}

impl RegressiveFn {
    pub fn new(d: &Derivator, p: GFunction) -> Result<Self> {
        let mut margin = f64::INFINITY;
        for j in d.jumps() {
            let m = (C::new(1.0, 0.0) + p.eval(j.t) * j.d).norm();
            if !(m > REGRESSIVE_EPS) {
                return Err(Error::NotRegressive { t: j.t, modulus: m });
            }
            margin = margin.min(m);
        }
        Ok(RegressiveFn { p, margin })
    }

    pub fn constant(d: &Derivator, lambda: C) -> Result<Self> {
        Self::new(d, GFunction::constant(lambda))
    }

    /// `min_j |1 + p(t_j)Δg(t_j)|` (infinite when there are no jumps).
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn p(&self) -> &GFunction {
        &self.p
    }
}

impl Shape {
    fn segments(&self) -> Option<Vec<(f64, C)>> {
        match self {
            Shape::General => None,
            Shape::Const(c) => Some(vec![(f64::INFINITY, *c)]),
            Shape::Piecewise(s) => Some(s.clone()),
        }
    }

    /// Pointwise combination of two shapes.
    pub fn combine(&self, other: &Shape, op: impl Fn(C, C) -> C) -> Shape {
        match (self, other) {
            (Shape::Const(a), Shape::Const(b)) => Shape::Const(op(*a, *b)),
            _ => match (self.segments(), other.segments()) {
                (Some(a), Some(b)) => {
                    let mut cuts: Vec<f64> = a.iter().chain(&b).map(|s| s.0).collect();
                    cuts.sort_by(f64::total_cmp);
                    cuts.dedup();
                    let at = |segs: &[(f64, C)], u: f64| segs.iter().find(|s| s.0 >= u).map_or(segs[segs.len() - 1].1, |s| s.1);
                    Shape::Piecewise(cuts.into_iter().map(|u| (u, op(at(&a, u), at(&b, u)))).collect())
                }
                _ => Shape::General,
            },
        }
    }

    pub fn map(&self, op: impl Fn(C) -> C) -> Shape {
        match self {
            Shape::General => Shape::General,
            Shape::Const(c) => Shape::Const(op(*c)),
            Shape::Piecewise(s) => Shape::Piecewise(s.iter().map(|&(u, c)| (u, op(c))).collect()),
        }
    }

    /// `∫_0^t c(s) ρ(s) ds` when the shape is known.
    pub(crate) fn continuous_integral(&self, d: &Derivator, t: f64) -> Option<C> {
        match self {
            Shape::General => None,
            Shape::Const(c) => Some(c * d.g_continuous(t)),
            Shape::Piecewise(segs) => {
                let mut acc = C::new(0.0, 0.0);
                let mut prev = 0.0_f64;
                for &(u, c) in segs {
                    let hi = u.min(t);
                    if hi > prev {
                        acc += c * (d.g_continuous(hi) - d.g_continuous(prev));
                    }
                    prev = prev.max(u);
                    if prev >= t {
                        break;
                    }
                }
                Some(acc)
            }
        }
    }
}

/// `ln(1 + p(t_j)Δg(t_j))` for every jump, or zeros under the corresponding
/// fault injection.
fn jump_logs(d: &Derivator, p: &GFunction) -> Vec<(f64, C)> {
    let omit = mutation::active(Mutation::OmitExpJumpLog);
    d.jumps()
        .iter()
        .map(|j| {
            let l = if omit { C::new(0.0, 0.0) } else { (C::new(1.0, 0.0) + p.eval(j.t) * j.d).ln() };
            (j.t, l)
        })
        .collect()
}

fn jump_log_sum(logs: &[(f64, C)], t: f64) -> C {
    logs.iter().filter(|(tj, _)| *tj < t).map(|(_, l)| l).sum()
}

/// `exp_g(p; t) = exp(∫_{[0,t)} p̃ dμ_g)`, the jump part of the exponent being
/// `Σ_{t_j<t} ln(1 + p(t_j)Δg(t_j))` (principal branch).
pub fn g_exponential(d: &Derivator, p: &RegressiveFn, t: f64) -> Result<C> {
    if !d.contains(t) {
        return Err(Error::Domain { t, t_end: d.t_end() });
    }
    let cont = match p.p.shape().continuous_integral(d, t) {
        Some(c) => c,
        None => gmeasure::integrate_continuous_between(d, &p.p, 0.0, t)?,
    };
    Ok((cont + jump_log_sum(&jump_logs(d, &p.p), t)).exp())
}

/// `exp_g(λ; t)` for a constant `λ`.
pub fn exp_const(d: &Derivator, lambda: C, t: f64) -> Result<C> {
    g_exponential(d, &RegressiveFn::constant(d, lambda)?, t)
}

/// `exp_g(p; ·)` as a function carrying `(exp_g)'_g = p(t*) exp_g` and, when
/// available, the second derivative. Non-constant coefficients of unknown
/// shape are tabulated on `d.grid(n)`.
pub fn exp_gfunction(d: &Derivator, p: &RegressiveFn, n: usize) -> Result<GFunction> {
    let pf = p.p.clone();
    let logs = Arc::new(jump_logs(d, &pf));
    let cont: Arc<dyn Fn(f64) -> C + Send + Sync> = match pf.shape() {
        Shape::General => {
            let table = gmeasure::cumulative_continuous(d, &pf, n)?;
            Arc::new(move |t| table.eval(t))
        }
        shape => {
            let (shape, dd) = (shape.clone(), d.clone());
            Arc::new(move |t| shape.continuous_integral(&dd, t).unwrap())
        }
    };
    let value: Arc<dyn Fn(f64) -> C + Send + Sync> = {
        let logs = logs.clone();
        Arc::new(move |t| (cont(t) + jump_log_sum(&logs, t)).exp())
    };
    let dd = d.clone();
    let (v1, p1) = (value.clone(), pf.clone());
    let mut out = GFunction::new(format!("exp_g({})", pf.label()), {
        let v = value.clone();
        move |t| v(t)
    })
    .with_deriv1(move |t| {
        let s = dd.star(t);
        p1.eval(s) * v1(s)
    })
    .with_breaks(d.jumps().iter().map(|j| j.t).chain(pf.breaks().iter().copied()));

    if let Shape::Const(lambda) = pf.shape() {
        let (lambda, v2, dd) = (*lambda, value.clone(), d.clone());
        out = out.with_deriv2(move |t| lambda * lambda * v2(dd.star(t)));
    } else if let Some(dp) = pf.deriv1_fn() {
        let (v2, p2, dd) = (value.clone(), pf.clone(), d.clone());
        out = out.with_deriv2(move |t| {
            let s = dd.star(t);
            let ps = p2.eval(s);
            v2(s) * (dp(s) * (1.0 + ps * dd.jump(s)) + ps * ps)
        });
    }
    Ok(out)
}

/// `exp_g(λ; ·)` for constant `λ`.
pub fn exp_const_gfunction(d: &Derivator, lambda: C) -> Result<GFunction> {
    exp_gfunction(d, &RegressiveFn::constant(d, lambda)?, 0)
}

/// `p + q + p q Δg`, the coefficient of the product of two exponentials.
pub fn circle_plus(d: &Derivator, p: &GFunction, q: &GFunction) -> GFunction {
    let (a, b, dd) = (p.clone(), q.clone(), d.clone());
    GFunction::new(format!("{}⊕{}", p.label(), q.label()), move |s| {
        let (x, y) = (a.eval(s), b.eval(s));
        x + y + x * y * dd.jump(s)
    })
    .with_shape(p.shape().combine(q.shape(), |x, y| x + y))
    .with_breaks(p.breaks().iter().chain(q.breaks()).copied())
}

/// `-p / (1 + pΔg)`, the coefficient of the reciprocal exponential.
pub fn circle_minus(d: &Derivator, p: &GFunction) -> GFunction {
    let (a, dd) = (p.clone(), d.clone());
    GFunction::new(format!("⊖{}", p.label()), move |s| {
        let x = a.eval(s);
        -x / (1.0 + x * dd.jump(s))
    })
    .with_shape(p.shape().map(|x| -x))
    .with_breaks(p.breaks().iter().copied())
}

/// `|exp_g(p) exp_g(q) − exp_g(p + q + pqΔg)|` at `t`.
pub fn g_exp_product_check(d: &Derivator, p: &GFunction, q: &GFunction, t: f64) -> Result<f64> {
    let ep = g_exponential(d, &RegressiveFn::new(d, p.clone())?, t)?;
    let eq = g_exponential(d, &RegressiveFn::new(d, q.clone())?, t)?;
    let er = g_exponential(d, &RegressiveFn::new(d, circle_plus(d, p, q))?, t)?;
    Ok((ep * eq - er).norm())
}

/// `|exp_g(p) exp_g(−p/(1+pΔg)) − 1|` at `t`.
pub fn g_exp_inverse_check(d: &Derivator, p: &GFunction, t: f64) -> Result<f64> {
    let ep = g_exponential(d, &RegressiveFn::new(d, p.clone())?, t)?;
    let einv = g_exponential(d, &RegressiveFn::new(d, circle_minus(d, p))?, t)?;
    Ok((ep * einv - 1.0).norm())
}

fn check_resolvent(d: &Derivator, lambda: C) -> Result<()> {
    for j in d.jumps() {
        let m = (1.0 + lambda * j.d).norm();
        if !(m > REGRESSIVE_EPS) {
            return Err(Error::NotRegressive { t: j.t, modulus: m });
        }
    }
    Ok(())
}

fn resolvent_integrand(d: &Derivator, eta: &GFunction, lambda: C) -> GFunction {
    let (e, dd) = (eta.clone(), d.clone());
    GFunction::new(format!("{}/(1+λΔg)", eta.label()), move |s| e.eval(s) / (1.0 + lambda * dd.jump(s)))
        .with_breaks(eta.breaks().iter().copied())
}

/// `φ(t) = ∫_{[0,t)} η / (1 + λΔg) dμ_g`.
pub fn phi_resolvent(d: &Derivator, eta: &GFunction, lambda: C, t: f64) -> Result<C> {
    check_resolvent(d, lambda)?;
    gmeasure::integrate(d, &resolvent_integrand(d, eta, lambda), t)
}

/// `φ` as a function with `φ'_g = η(t*) / (1 + λΔg(t*))`.
pub fn phi_gfunction(d: &Derivator, eta: &GFunction, lambda: C, n: usize) -> Result<GFunction> {
    check_resolvent(d, lambda)?;
    if let Shape::Const(c) = eta.shape() {
        let (c, dd) = (*c, d.clone());
        let value = move |t: f64| {
            let jumps: C = dd.jumps().iter().filter(|j| j.t < t).map(|j| j.d / (1.0 + lambda * j.d)).sum();
            c * (dd.g_continuous(t) + jumps)
        };
        let dd = d.clone();
        return Ok(GFunction::new("φ", value)
            .with_deriv1(move |t| {
                let s = dd.star(t);
                c / (1.0 + lambda * dd.jump(s))
            })
            .with_breaks(d.jumps().iter().map(|j| j.t)));
    }
    gmeasure::cumulative(d, &resolvent_integrand(d, eta, lambda), n)
}

/// `v = φ exp_g(λ)` with `φ = ∫ 1/(1+λΔg) dμ_g`, carrying
/// `v' = exp_g + λ v` and `v'' = 2λ exp_g + λ² v`.
pub fn polynomial_exp_gfunction(d: &Derivator, lambda: C) -> Result<GFunction> {
    let e = exp_const_gfunction(d, lambda)?;
    let phi = phi_gfunction(d, &GFunction::constant(C::new(1.0, 0.0)), lambda, 0)?;
    let (e1, p1) = (e.clone(), phi.clone());
    let v = move |t: f64| p1.eval(t) * e1.eval(t);
    let (e2, v2, dd) = (e.clone(), v.clone(), d.clone());
    let (e3, v3, dd3) = (e.clone(), v.clone(), d.clone());
    Ok(GFunction::new(format!("φ·exp_g({lambda})"), v)
        .with_deriv1(move |t| {
            let s = dd.star(t);
            e2.eval(s) + lambda * v2(s)
        })
        .with_deriv2(move |t| {
            let s = dd3.star(t);
            2.0 * lambda * e3.eval(s) + lambda * lambda * v3(s)
        })
        .with_breaks(d.jumps().iter().map(|j| j.t)))
}

/// `v^{(n)}_g(t) = n λ^{n−1} exp_g(λ; t) + λ^n v(t)` for `v = φ exp_g(λ)`.
pub fn polynomial_exp_solution(d: &Derivator, lambda: C, order: u32, t: f64) -> Result<C> {
    let e = exp_const(d, lambda, t)?;
    let phi = phi_resolvent(d, &GFunction::constant(C::new(1.0, 0.0)), lambda, t)?;
    let v = phi * e;
    if order == 0 {
        return Ok(v);
    }
    let n = order as i32;
    Ok(C::new(order as f64, 0.0) * lambda.powi(n - 1) * e + lambda.powi(n) * v)
}
