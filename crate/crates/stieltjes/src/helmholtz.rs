// SPDX-License-Identifier: Apache-2.0
//! One-dimensional Helmholtz equation `v''_g + w0² v = f` with
//! `w0 = w1` on `[0, t1]` and `w0 = w2` on `(t1, T]`.
//!
//! Roots: `λ_1^{1,2} = ±i w1` before the switch, `λ_2^{1,2} = ±i w2` after.
//! Each basis function starts as `exp_g(λ_1^k)` and continues as
//! `α_1^k exp_g(λ_2^1) + α_2^k exp_g(λ_2^2)`, the α chosen so that `y`,
//! `y'_g` and `y''_g` stay g-continuous across `t1`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::gcalculus::{self, RegressiveFn};
use crate::gmeasure::{self, GFunction, Shape};
use crate::solver::{Method, ProblemSpec, SolutionBundle};
use crate::wronskian::SolutionPair;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct HelmholtzSpec {
    pub w1: f64,
    pub w2: f64,
    pub t1: f64,
    pub x0: C,
    pub v0: C,
    pub f: GFunction,
    /// Accept a switch point where `g` is continuous. Used for `δ = 0`, the
    /// classical problem, which is the limit of the jump problems.
    pub allow_regular_switch: bool,
}

impl HelmholtzSpec {
    pub fn new(w1: f64, w2: f64, t1: f64, x0: C, v0: C) -> Self {
        HelmholtzSpec { w1, w2, t1, x0, v0, f: GFunction::zero(), allow_regular_switch: false }
    }

    pub fn with_forcing(mut self, f: GFunction) -> Self {
        self.f = f;
        self
    }

    pub fn regular_switch(mut self, allow: bool) -> Self {
        self.allow_regular_switch = allow;
        self
    }

    /// `(λ_1^1, λ_1^2, λ_2^1, λ_2^2)`.
    pub fn roots(&self) -> (C, C, C, C) {
        (I * self.w1, -I * self.w1, I * self.w2, -I * self.w2)
    }

    pub fn validate(&self, d: &Derivator) -> Result<()> {
        if !(self.w1.is_finite() && self.w2.is_finite()) {
            return Err(Error::Contract("w1 and w2 must be finite".into()));
        }
        if self.w1 == 0.0 {
            return Err(Error::Precondition { t: 0.0, what: "w1 = 0: roots ±i w1 coincide".into() });
        }
        if self.w2 == 0.0 {
            return Err(Error::Singular("w2 = 0: the α system has determinant ∝ w2".into()));
        }
        if !(self.t1 > 0.0 && self.t1 < d.t_end()) {
            return Err(Error::Contract(format!("t1 = {} must lie inside (0, T)", self.t1)));
        }
        if !self.allow_regular_switch && !d.is_jump(self.t1) {
            return Err(Error::Precondition { t: self.t1, what: "switch point t1 is not a jump of g".into() });
        }
        Ok(())
    }

    /// `w0(t)²`, left-continuous at `t1`.
    pub fn w0_sq(&self, t: f64) -> f64 {
        if t <= self.t1 {
            self.w1 * self.w1
        } else {
            self.w2 * self.w2
        }
    }

    /// The problem in generic form: `P ≡ 0`, `Q = w0²`.
    pub fn problem(&self, d: &Derivator) -> ProblemSpec {
        let (a, b) = (C::new(self.w1 * self.w1, 0.0), C::new(self.w2 * self.w2, 0.0));
        let t1 = self.t1;
        let dd = d.clone();
        let dq = move |t: f64| {
            let s = dd.star(t);
            if s == t1 && dd.is_jump(s) {
                (b - a) / dd.jump(s)
            } else {
                C::new(0.0, 0.0)
            }
        };
        let q = GFunction::new("w0²", move |t| if t <= t1 { a } else { b })
            .with_deriv1(dq)
            .with_shape(Shape::Piecewise(vec![(t1, a), (f64::INFINITY, b)]))
            .with_breaks([t1]);
        ProblemSpec { p: GFunction::zero(), q, f: self.f.clone(), x0: self.x0, v0: self.v0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCoefficients {
    pub a11: C,
    pub a21: C,
    pub a12: C,
    pub a22: C,
}

impl AlphaCoefficients {
    /// `(α_1^k, α_2^k)`.
    pub fn for_basis(&self, k: usize) -> (C, C) {
        if k == 1 {
            (self.a11, self.a21)
        } else {
            (self.a12, self.a22)
        }
    }

    pub fn max_relative_deviation(&self, other: &AlphaCoefficients) -> f64 {
        [(self.a11, other.a11), (self.a21, other.a21), (self.a12, other.a12), (self.a22, other.a22)]
            .iter()
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

struct SwitchData {
    roots: (C, C, C, C),
    dg: f64,
    e: [C; 4],
}

fn switch_data(d: &Derivator, spec: &HelmholtzSpec) -> Result<SwitchData> {
    spec.validate(d)?;
    let roots = spec.roots();
    let (l11, l12, l21, l22) = roots;
    let e = [
        gcalculus::exp_const(d, l11, spec.t1)?,
        gcalculus::exp_const(d, l12, spec.t1)?,
        gcalculus::exp_const(d, l21, spec.t1)?,
        gcalculus::exp_const(d, l22, spec.t1)?,
    ];
    Ok(SwitchData { roots, dg: d.jump(spec.t1), e })
}

/// `α_1^k = exp_g(λ_1^k;t1)(1+λ_1^kΔ)(λ_2^2−λ_1^k) / [exp_g(λ_2^1;t1)(1+λ_2^1Δ)(λ_2^2−λ_2^1)]`,
/// `α_2^k = exp_g(λ_1^k;t1)(1+λ_1^kΔ)(λ_1^k−λ_2^1) / [exp_g(λ_2^2;t1)(1+λ_2^2Δ)(λ_2^2−λ_2^1)]`.
pub fn alpha_closed_form(d: &Derivator, spec: &HelmholtzSpec) -> Result<AlphaCoefficients> {
    let s = switch_data(d, spec)?;
    let (l11, l12, l21, l22) = s.roots;
    let dg = s.dg;
    let den1 = s.e[2] * (1.0 + l21 * dg) * (l22 - l21);
    let den2 = s.e[3] * (1.0 + l22 * dg) * (l22 - l21);
    let r1 = s.e[0] * (1.0 + l11 * dg);
    let r2 = s.e[1] * (1.0 + l12 * dg);
    Ok(AlphaCoefficients {
        a11: r1 * (l22 - l11) / den1,
        a21: r1 * (l11 - l21) / den2,
        a12: r2 * (l22 - l12) / den1,
        a22: r2 * (l12 - l21) / den2,
    })
}

fn solve2(a: [[C; 2]; 2], b: [C; 2]) -> Result<[C; 2]> {
    let scale = a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    let (mut a, mut b) = (a, b);
    if a[1][0].norm() > a[0][0].norm() {
        a.swap(0, 1);
        b.swap(0, 1);
    }
    if !(a[0][0].norm() > 1e-300) {
        return Err(Error::Singular("α system: zero pivot".into()));
    }
    let m = a[1][0] / a[0][0];
    let u22 = a[1][1] - m * a[0][1];
    if !(u22.norm() > 1e-13 * scale) {
        return Err(Error::Singular(format!("α system: pivot {:.3e} relative to {:.3e}", u22.norm(), scale)));
    }
    let x2 = (b[1] - m * b[0]) / u22;
    let x1 = (b[0] - a[0][1] * x2) / a[0][0];
    Ok([x1, x2])
}

/// Solves the 2×2 matching system at `t1` directly.
pub fn alpha_linear_solve(d: &Derivator, spec: &HelmholtzSpec) -> Result<AlphaCoefficients> {
    let roots = spec.roots();
    let (l11, l12, l21, l22) = roots;
    let dg = if spec.t1 > 0.0 && spec.t1 < d.t_end() { d.jump(spec.t1) } else { 0.0 };
    let ex = |l: C| gcalculus::exp_const(d, l, spec.t1);
    let (e21, e22) = (ex(l21)? * (1.0 + l21 * dg), ex(l22)? * (1.0 + l22 * dg));
    let a = [[e21, e22], [l21 * e21, l22 * e22]];
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for (k, l) in [l11, l12].into_iter().enumerate() {
        let r = ex(l)? * (1.0 + l * dg);
        out[k] = solve2(a, [r, l * r])?;
    }
    spec.validate(d)?;
    Ok(AlphaCoefficients { a11: out[0][0], a21: out[0][1], a12: out[1][0], a22: out[1][1] })
}

/// `max_k |left − right|` of the value and derivative matching conditions at `t1`.
pub fn gcond_residuals(d: &Derivator, spec: &HelmholtzSpec, alpha: &AlphaCoefficients) -> Result<(f64, f64)> {
    let s = switch_data(d, spec)?;
    let (l11, l12, l21, l22) = s.roots;
    let dg = s.dg;
    let (e21, e22) = (s.e[2] * (1.0 + l21 * dg), s.e[3] * (1.0 + l22 * dg));
    let mut worst = (0.0_f64, 0.0_f64);
    for (k, (l, e)) in [(l11, s.e[0]), (l12, s.e[1])].into_iter().enumerate() {
        let (a1, a2) = alpha.for_basis(k + 1);
        let left = (1.0 + l * dg) * e;
        worst.0 = worst.0.max((left - a1 * e21 - a2 * e22).norm());
        worst.1 = worst.1.max((l * left - a1 * l21 * e21 - a2 * l22 * e22).norm());
    }
    Ok(worst)
}

struct Basis {
    d: Derivator,
    t1: f64,
    roots: (C, C, C, C),
    alpha: AlphaCoefficients,
}

impl Basis {
    /// `(y_k, y_k', y_k'')` at `t`.
    fn eval(&self, k: usize, t: f64) -> [C; 3] {
        let (l11, l12, l21, l22) = self.roots;
        let ex = |l: C| gcalculus::exp_const(&self.d, l, t).unwrap_or(C::new(f64::NAN, f64::NAN));
        if t <= self.t1 {
            let l = if k == 1 { l11 } else { l12 };
            let e = ex(l);
            [e, l * e, l * l * e]
        } else {
            let (a1, a2) = self.alpha.for_basis(k);
            let (e1, e2) = (a1 * ex(l21), a2 * ex(l22));
            [e1 + e2, l21 * e1 + l22 * e2, l21 * l21 * e1 + l22 * l22 * e2]
        }
    }
}

fn basis_data(d: &Derivator, spec: &HelmholtzSpec) -> Result<Arc<Basis>> {
    let alpha = alpha_closed_form(d, spec)?;
    Ok(Arc::new(Basis { d: d.clone(), t1: spec.t1, roots: spec.roots(), alpha }))
}

fn basis_pair(d: &Derivator, b: &Arc<Basis>) -> SolutionPair {
    let mut breaks: Vec<f64> = d.jumps().iter().map(|j| j.t).collect();
    breaks.push(b.t1);
    let make = |k: usize| {
        let (x, y, z, d1, d2) = (b.clone(), b.clone(), b.clone(), d.clone(), d.clone());
        GFunction::new(format!("y{k}"), move |t| x.eval(k, t)[0])
            .with_deriv1(move |t| y.eval(k, d1.star(t))[1])
            .with_deriv2(move |t| z.eval(k, d2.star(t))[2])
            .with_breaks(breaks.clone())
    };
    SolutionPair::new(make(1), make(2))
}

/// `y_k = exp_g(λ_1^k) χ_[0,t1] + (α_1^k exp_g(λ_2^1) + α_2^k exp_g(λ_2^2)) χ_(t1,T]`.
pub fn helmholtz_basis(d: &Derivator, spec: &HelmholtzSpec) -> Result<SolutionPair> {
    Ok(basis_pair(d, &basis_data(d, spec)?))
}

fn combine(d: &Derivator, pair: &SolutionPair, c1: C, c2: C, label: &str) -> GFunction {
    let (a, b) = (pair.y1.clone(), pair.y2.clone());
    let (a1, b1) = (pair.y1.clone(), pair.y2.clone());
    let (a2, b2) = (pair.y1.clone(), pair.y2.clone());
    GFunction::new(label, move |t| c1 * a.eval(t) + c2 * b.eval(t))
        .with_deriv1(move |t| c1 * a1.deriv1(t).unwrap() + c2 * b1.deriv1(t).unwrap())
        .with_deriv2(move |t| c1 * a2.deriv2(t).unwrap() + c2 * b2.deriv2(t).unwrap())
        .with_breaks(pair.y1.breaks().iter().copied())
        .with_label(format!("{label} on {:?}", d.jumps().len()))
}

/// `v_h = (λ_1^2 x0 − v0)/(λ_1^2 − λ_1^1) y1 + (v0 − λ_1^1 x0)/(λ_1^2 − λ_1^1) y2`.
pub fn helmholtz_homogeneous(d: &Derivator, spec: &HelmholtzSpec) -> Result<SolutionBundle> {
    let pair = helmholtz_basis(d, spec)?;
    let (l11, l12, _, _) = spec.roots();
    let c1 = (l12 * spec.x0 - spec.v0) / (l12 - l11);
    let c2 = (spec.v0 - l11 * spec.x0) / (l12 - l11);
    Ok(SolutionBundle { v: combine(d, &pair, c1, c2, "helmholtz-homogeneous"), method: Method::Helmholtz })
}

/// Particular solution from the piecewise integral formulas: on `[0, t1]`
/// the constant-coefficient form with roots `±i w1`; beyond `t1`, the
/// brackets collect the `[0, t1)` integrals, the point mass at `t1` and the
/// α-weighted integrals over `(t1, t)`.
pub fn helmholtz_particular(d: &Derivator, spec: &HelmholtzSpec, n: usize) -> Result<SolutionBundle> {
    let b = basis_data(d, spec)?;
    let pair = basis_pair(d, &b);
    let f = spec.f.clone();
    if matches!(f.shape(), Shape::Const(c) if *c == C::new(0.0, 0.0)) && f.breaks().is_empty() {
        return Ok(SolutionBundle { v: GFunction::zero(), method: Method::Helmholtz });
    }
    let (l11, l12, l21, l22) = spec.roots();
    let t1 = spec.t1;
    let dt1 = d.jump(t1);
    let alpha = b.alpha;
    let mut breaks: Vec<f64> = d.jumps().iter().map(|j| j.t).chain(f.breaks().iter().copied()).collect();
    breaks.push(t1);

    let first = |l: C| -> Result<GFunction> {
        let (ff, dd) = (f.clone(), d.clone());
        let h = GFunction::new("e⁻¹f/(1+λΔg)", move |s| {
            ff.eval(s) / (gcalculus::exp_const(&dd, l, s).unwrap() * (1.0 + l * dd.jump(s)))
        })
        .with_breaks(breaks.clone());
        gmeasure::cumulative(d, &h, n)
    };
    let (i11, i12) = (first(l11)?, first(l12)?);

    // exp_g(w0²Δg; ·): no continuous part, factor 1 + w0(t_j)² d_j² at jumps.
    let (sp, dd) = (spec.clone(), d.clone());
    let w_coef = GFunction::new("w0²Δg", move |s| C::new(sp.w0_sq(s) * dd.jump(s), 0.0)).with_shape(Shape::Const(C::new(0.0, 0.0)));
    let w_coef = RegressiveFn::new(d, w_coef)?;
    let after = |num: C, other: C| -> Result<GFunction> {
        let (ff, dd, wc) = (f.clone(), d.clone(), w_coef.clone());
        let h = GFunction::new("(t1,t) integrand", move |s| {
            if s <= t1 {
                return C::new(0.0, 0.0);
            }
            let e = gcalculus::exp_const(&dd, num, s).unwrap();
            let w = gcalculus::g_exponential(&dd, &wc, s).unwrap();
            e * ff.eval(s) / ((1.0 + other * dd.jump(s)) * w)
        })
        .with_breaks(breaks.clone());
        gmeasure::cumulative(d, &h, n)
    };
    let (j1, j2) = (after(l21, l22)?, after(l22, l21)?);

    let ft1 = f.eval(t1);
    let mass = |l: C| -> Result<C> { Ok(ft1 * dt1 / (gcalculus::exp_const(d, l, t1)? * (1.0 + l * dt1))) };
    let base1 = i11.eval(t1) + mass(l11)?;
    let base2 = i12.eval(t1) + mass(l12)?;
    let k = 1.0 / (l11 - l12);
    // (c1, c2) with v_p = c1 y1 + c2 y2.
    let coeffs = Arc::new(move |t: f64| -> (C, C) {
        if t <= t1 {
            (k * i11.eval(t), -k * i12.eval(t))
        } else {
            let (jj1, jj2) = (j1.eval(t), j2.eval(t));
            let b1 = base1 + alpha.a12 * jj1 + alpha.a22 * jj2;
            let b2 = base2 + alpha.a11 * jj1 + alpha.a21 * jj2;
            (k * b1, -k * b2)
        }
    });
    let (cc, bb) = (coeffs.clone(), b.clone());
    let value = move |t: f64| {
        let (c1, c2) = cc(t);
        c1 * bb.eval(1, t)[0] + c2 * bb.eval(2, t)[0]
    };
    let (cc, bb, dd) = (coeffs.clone(), b.clone(), d.clone());
    let d1 = move |t: f64| {
        let s = dd.star(t);
        let (c1, c2) = cc(s);
        c1 * bb.eval(1, s)[1] + c2 * bb.eval(2, s)[1]
    };
    let (cc, bb, dd, ff) = (coeffs.clone(), b.clone(), d.clone(), f.clone());
    let d2 = move |t: f64| {
        let s = dd.star(t);
        let (c1, c2) = cc(s);
        c1 * bb.eval(1, s)[2] + c2 * bb.eval(2, s)[2] + ff.eval(s)
    };
    let _ = pair;
    let v = GFunction::new("helmholtz-particular", value).with_deriv1(d1).with_deriv2(d2).with_breaks(breaks.clone());
    Ok(SolutionBundle { v, method: Method::Helmholtz })
}

/// `W_g(y1, y2) = (λ_1^2 − λ_1^1)(1 + w0²Δg²) exp_g(w0²Δg; ·)`.
pub fn helmholtz_wronskian(d: &Derivator, spec: &HelmholtzSpec, t: f64) -> Result<C> {
    let (l11, l12, _, _) = spec.roots();
    let w = spec.w0_sq(t);
    let logs: f64 = d.jumps().iter().filter(|j| j.t < t).map(|j| (1.0 + spec.w0_sq(j.t) * j.d * j.d).ln()).sum();
    let dg = d.jump(t);
    Ok((l12 - l11) * (1.0 + w * dg * dg) * logs.exp())
}

/// `g(t) = t + δ χ_{t > t1}` on `[0, T]`; the identity for `δ = 0`.
pub fn delta_derivator(t1: f64, delta: f64, t_end: f64) -> Derivator {
    if delta == 0.0 {
        Derivator::identity(t_end)
    } else {
        Derivator::with_jumps(t_end, &[(t1, delta)])
    }
}

/// α values for `g = t + δ χ_{t>1}`, written out.
pub fn delta_example_alphas(w1: f64, w2: f64, delta: f64) -> AlphaCoefficients {
    let (p, m) = (w1 + w2, w2 - w1);
    let den = |s: f64| 2.0 * w2 * (1.0 + s * I * delta * w2);
    AlphaCoefficients {
        a11: (I * (w1 - w2)).exp() * p * (1.0 + I * delta * w1) / den(1.0),
        a21: (I * (w1 + w2)).exp() * m * (1.0 + I * delta * w1) / den(-1.0),
        a12: (-I * (w1 + w2)).exp() * m * (1.0 - I * delta * w1) / den(1.0),
        a22: (I * (w2 - w1)).exp() * p * (1.0 - I * delta * w1) / den(-1.0),
    }
}

/// Homogeneous solution for `g = t + δ χ_{t>1}`, written out; `δ = 0` gives
/// the classical transmission solution.
pub fn delta_example_vh(w1: f64, w2: f64, delta: f64, x0: C, v0: C, t: f64) -> C {
    let a = (w1 * x0 - I * v0) / (2.0 * w1);
    let b = (w1 * x0 + I * v0) / (2.0 * w1);
    if t <= 1.0 {
        return a * (I * w1 * t).exp() + b * (-I * w1 * t).exp();
    }
    let (p, m) = (w1 + w2, w2 - w1);
    let up = (I * w2 * t).exp();
    let down = (-I * w2 * t).exp();
    a * ((I * (w1 - w2)).exp() * p * (1.0 + I * delta * w1) / (2.0 * w2) * up
        + (I * (w1 + w2)).exp() * m * (1.0 + I * delta * w1) / (2.0 * w2) * down)
        + b * ((-I * (w1 + w2)).exp() * m * (1.0 - I * delta * w1) / (2.0 * w2) * up
            + (-I * (w1 - w2)).exp() * p * (1.0 - I * delta * w1) / (2.0 * w2) * down)
}

/// Classical solution of `x'' + w0² x = 0` with a switch at `t1`, by
/// continuing value and slope across the switch.
pub fn classical_solution(w1: f64, w2: f64, t1: f64, x0: C, v0: C, t: f64) -> C {
    let (s, c) = (w1 * t.min(t1)).sin_cos();
    let left = x0 * c + v0 / w1 * s;
    if t <= t1 {
        return left;
    }
    let slope = -x0 * w1 * s + v0 * c;
    let (s2, c2) = (w2 * (t - t1)).sin_cos();
    left * c2 + slope / w2 * s2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub delta: f64,
    pub max_error: f64,
}

/// For each `δ`, the largest grid distance between the homogeneous solution
/// on `g = t + δ χ_{t>t1}` and the classical solution.
#[allow(clippy::too_many_arguments)]
pub fn classical_limit_study(w1: f64, w2: f64, t1: f64, t_end: f64, x0: C, v0: C, deltas: &[f64], n: usize) -> Result<Vec<LimitRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let d = delta_derivator(t1, delta, t_end);
            let spec = HelmholtzSpec::new(w1, w2, t1, x0, v0).regular_switch(delta == 0.0);
            let v = helmholtz_homogeneous(&d, &spec)?.v;
            let max_error = d
                .grid(n)
                .into_iter()
                .map(|t| (v.eval(t) - classical_solution(w1, w2, t1, x0, v0, t)).norm())
                .fold(0.0, f64::max);
            Ok(LimitRow { delta, max_error })
        })
        .collect()
}

/// Classical case: `|v''(t1+) − v''(t1−)|` and `|v(t1)|`.
pub fn classical_second_derivative_jump(w1: f64, w2: f64, t1: f64, t_end: f64, x0: C, v0: C) -> Result<(f64, f64)> {
    let d = Derivator::identity(t_end);
    let spec = HelmholtzSpec::new(w1, w2, t1, x0, v0).regular_switch(true);
    let v = helmholtz_homogeneous(&d, &spec)?.v;
    let second = GFunction::new("v''", {
        let v = v.clone();
        move |t| v.deriv2(t).unwrap()
    })
    .with_breaks([t1]);
    let jump = gcalculus::right_limit(&d, &second, t1) - gcalculus::left_limit(&d, &second, t1);
    Ok((jump.norm(), v.eval(t1).norm()))
}

/// Jump case: `|v''_g(t1) − v''_g(t1−)|`, with `v''_g(t1)` taken as the jump
/// quotient `(v'_g(t1+) − v'_g(t1)) / Δg(t1)` of the analytic first derivative.
pub fn jump_second_derivative_continuity(d: &Derivator, spec: &HelmholtzSpec) -> Result<f64> {
    let v = helmholtz_homogeneous(d, spec)?.v;
    let t1 = spec.t1;
    let dg = d.jump(t1);
    if dg == 0.0 {
        return Err(Error::Precondition { t: t1, what: "t1 is not a jump".into() });
    }
    let first = v.first_derivative().unwrap().value_only();
    let quotient = (gcalculus::right_limit(d, &first, t1) - first.eval(t1)) / dg;
    let second = GFunction::new("v''", move |t| v.deriv2(t).unwrap()).with_breaks([t1]);
    Ok((quotient - gcalculus::left_limit(d, &second, t1)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{self, ResidualMode};
    use crate::wronskian;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn e1() -> Derivator {
        Derivator::with_jumps(3.0, &[(1.0, 0.5)])
    }

    fn spec12() -> HelmholtzSpec {
        HelmholtzSpec::new(1.0, 2.0, 1.0, c(1.0), c(0.0))
    }

    #[test]
    fn equal_frequencies_give_identity_alphas() {
        let a = alpha_closed_form(&e1(), &HelmholtzSpec::new(1.5, 1.5, 1.0, c(1.0), c(0.0))).unwrap();
        assert!((a.a11 - c(1.0)).norm() < 1e-15 && a.a21.norm() < 1e-15);
        assert!(a.a12.norm() < 1e-15 && (a.a22 - c(1.0)).norm() < 1e-15);
        let b = alpha_linear_solve(&e1(), &HelmholtzSpec::new(1.5, 1.5, 1.0, c(1.0), c(0.0))).unwrap();
        assert!(a.max_relative_deviation(&b) < 1e-12 || b.a21.norm() < 1e-15);
    }

    #[test]
    fn alphas_match_written_out_example() {
        let d = e1();
        let a = alpha_closed_form(&d, &spec12()).unwrap();
        let b = alpha_linear_solve(&d, &spec12()).unwrap();
        let x = delta_example_alphas(1.0, 2.0, 0.5);
        assert!(a.max_relative_deviation(&x) < 1e-13);
        assert!(a.max_relative_deviation(&b) < 1e-12);
        let (r1, r2) = gcond_residuals(&d, &spec12(), &a).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn singular_and_invalid_specs() {
        let d = e1();
        let s = HelmholtzSpec::new(1.0, 1e-300, 1.0, c(1.0), c(0.0));
        assert!(matches!(alpha_linear_solve(&d, &s), Err(Error::Singular(_))));
        let s = HelmholtzSpec::new(1.0, 0.0, 1.0, c(1.0), c(0.0));
        assert!(matches!(alpha_closed_form(&d, &s), Err(Error::Singular(_))));
        let s = HelmholtzSpec::new(1.0, 2.0, 1.5, c(1.0), c(0.0));
        assert!(matches!(alpha_closed_form(&d, &s), Err(Error::Precondition { .. })));
    }

    #[test]
    fn basis_solves_equation_and_wronskian_closed_form() {
        let d = e1();
        let spec = spec12();
        let pair = helmholtz_basis(&d, &spec).unwrap();
        let problem = spec.problem(&d);
        for y in [&pair.y1, &pair.y2] {
            let sol = SolutionBundle { v: y.clone(), method: Method::Helmholtz };
            assert!(solver::residual(&d, &sol, &problem, 256, ResidualMode::Analytic).unwrap() < 1e-12);
            assert!(solver::residual(&d, &sol, &problem, 64, ResidualMode::Numeric).unwrap() < 1e-6);
        }
        let w0 = wronskian::wronskian_simplified(&d, &pair, 0.0).unwrap();
        assert!((w0 - C::new(0.0, -2.0)).norm() < 1e-15);
        for t in d.grid(64) {
            let w = wronskian::wronskian_g(&d, &pair, t).unwrap();
            assert!((w - helmholtz_wronskian(&d, &spec, t).unwrap()).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn homogeneous_matches_written_out_display() {
        let d = e1();
        let spec = HelmholtzSpec::new(1.0, 2.0, 1.0, c(1.0), c(0.3));
        let v = helmholtz_homogeneous(&d, &spec).unwrap().v;
        assert!((v.eval(0.0) - c(1.0)).norm() < 1e-14);
        assert!((v.d1(0.0).unwrap() - c(0.3)).norm() < 1e-14);
        for t in d.grid(40) {
            assert!((v.eval(t) - delta_example_vh(1.0, 2.0, 0.5, c(1.0), c(0.3), t)).norm() < 1e-12);
            assert!(v.eval(t).im.abs() < 1e-10);
        }
    }

    #[test]
    fn classical_transmission_matches_display_at_zero_delta() {
        for t in [0.3, 1.0, 1.7, 3.0] {
            let a = classical_solution(1.0, 2.0, 1.0, c(1.0), c(0.4), t);
            let b = delta_example_vh(1.0, 2.0, 0.0, c(1.0), c(0.4), t);
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn particular_matches_generic_path() {
        let d = e1();
        let spec = spec12().with_forcing(GFunction::constant(c(1.0)));
        let vp = helmholtz_particular(&d, &spec, 512).unwrap();
        let pair = helmholtz_basis(&d, &spec).unwrap();
        let problem = spec.problem(&d);
        let generic = solver::particular_solution(&d, &problem.p, &problem.q, &problem.f, &pair, 512).unwrap();
        for t in d.grid(64) {
            assert!((vp.v.eval(t) - generic.v.eval(t)).norm() < 1e-9, "t={t}");
        }
        let zero = ProblemSpec { x0: c(0.0), v0: c(0.0), ..problem };
        assert!(solver::residual(&d, &vp, &zero, 256, ResidualMode::Analytic).unwrap() < 1e-9);
    }

    #[test]
    fn particular_classical_constant_forcing() {
        let d = Derivator::identity(3.0);
        let spec = HelmholtzSpec::new(2.0, 2.0, 1.0, c(0.0), c(0.0))
            .with_forcing(GFunction::constant(c(1.0)))
            .regular_switch(true);
        let vp = helmholtz_particular(&d, &spec, 512).unwrap();
        for t in [0.5, 1.0, 2.5] {
            assert!((vp.v.eval(t) - c((1.0 - (2.0 * t).cos()) / 4.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn second_derivative_jump_and_g_continuity() {
        let (jump, v1) = classical_second_derivative_jump(1.0, 2.0, 1.0, 3.0, c(1.0), c(0.0)).unwrap();
        assert!((jump / v1 - 3.0).abs() < 1e-6);
        let d = e1();
        assert!(jump_second_derivative_continuity(&d, &spec12()).unwrap() < 1e-6);
    }

    #[test]
    fn limit_study_decreases() {
        let rows = classical_limit_study(1.0, 2.0, 1.0, 3.0, c(1.0), c(0.0), &[0.4, 0.2, 0.1, 0.05], 512).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].max_error < w[0].max_error);
        }
        let same = classical_limit_study(1.5, 1.5, 1.0, 3.0, c(1.0), c(0.0), &[0.0], 512).unwrap();
        assert!(same[0].max_error < 1e-12);
    }
}
