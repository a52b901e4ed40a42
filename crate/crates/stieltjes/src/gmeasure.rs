// SPDX-License-Identifier: Apache-2.0
//! Lebesgue–Stieltjes integration over half-open intervals `[0, t)`.
//!
//! The jump of `g` at the left endpoint is included and the jump at `t` is
//! excluded. The absolutely continuous part is handled by adaptive quadrature
//! on segments that never straddle a structural point of the derivator or a
//! declared break of the integrand.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::derivator::Derivator;
use crate::error::{Error, Result};
use crate::quadrature;

pub type Eval = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// What is known about a function away from the jump set of the derivator.
/// Integrals of the continuous part may use it; values at jumps always come
/// from the function itself.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    General,
    Const(Complex64),
    /// `(until, c)` segments: the function equals `c` on `(previous until, until)`.
    Piecewise(Vec<(f64, Complex64)>),
}

/// A complex-valued function on `[0, T]` with optional analytic g-derivatives.
#[derive(Clone)]
pub struct GFunction {
    value: Eval,
    deriv1: Option<Eval>,
    deriv2: Option<Eval>,
    breaks: Vec<f64>,
    shape: Shape,
    label: String,
}

impl fmt::Debug for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GFunction")
            .field("label", &self.label)
            .field("deriv1", &self.deriv1.is_some())
            .field("deriv2", &self.deriv2.is_some())
            .field("breaks", &self.breaks)
            .finish()
    }
}

impl GFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        GFunction {
            value: Arc::new(f),
            deriv1: None,
            deriv2: None,
            breaks: Vec::new(),
            shape: Shape::General,
            label: label.into(),
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |t| Complex64::new(f(t), 0.0))
    }

    /// Constant function; both g-derivatives are zero.
    pub fn constant(c: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut f = Self::new(format!("const {c}"), move |_| c)
            .with_deriv1(move |_| zero)
            .with_deriv2(move |_| zero);
        f.shape = Shape::Const(c);
        f
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    pub fn with_deriv1(mut self, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.deriv1 = Some(Arc::new(f));
        self
    }

    pub fn with_deriv2(mut self, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        self.deriv2 = Some(Arc::new(f));
        self
    }

    pub(crate) fn with_deriv2_arc(mut self, f: Option<Eval>) -> Self {
        self.deriv2 = f;
        self
    }

    /// Declares points where the value may be discontinuous in `t`.
    pub fn with_breaks(mut self, breaks: impl IntoIterator<Item = f64>) -> Self {
        self.breaks.extend(breaks);
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
        self
    }

    pub fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Drops the analytic derivatives, leaving the value only.
    pub fn value_only(&self) -> Self {
        GFunction {
            value: self.value.clone(),
            deriv1: None,
            deriv2: None,
            breaks: self.breaks.clone(),
            shape: self.shape.clone(),
            label: self.label.clone(),
        }
    }

    /// The analytic first derivative as a function in its own right, carrying
    /// the second derivative as its first.
    pub fn first_derivative(&self) -> Option<Self> {
        let d1 = self.deriv1.clone()?;
        Some(GFunction {
            value: d1,
            deriv1: self.deriv2.clone(),
            deriv2: None,
            breaks: self.breaks.clone(),
            shape: Shape::General,
            label: format!("({})'", self.label),
        })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.value)(t)
    }

    pub fn deriv1(&self, t: f64) -> Option<Complex64> {
        self.deriv1.as_ref().map(|f| f(t))
    }

    pub fn deriv2(&self, t: f64) -> Option<Complex64> {
        self.deriv2.as_ref().map(|f| f(t))
    }

    pub fn has_deriv1(&self) -> bool {
        self.deriv1.is_some()
    }

    pub fn has_deriv2(&self) -> bool {
        self.deriv2.is_some()
    }

    /// First derivative or a contract error naming the function.
    pub fn d1(&self, t: f64) -> Result<Complex64> {
        self.deriv1(t).ok_or_else(|| Error::Contract(format!("{} carries no first g-derivative", self.label)))
    }

    pub fn d2(&self, t: f64) -> Result<Complex64> {
        self.deriv2(t).ok_or_else(|| Error::Contract(format!("{} carries no second g-derivative", self.label)))
    }

    pub fn value_fn(&self) -> Eval {
        self.value.clone()
    }

    pub fn deriv1_fn(&self) -> Option<Eval> {
        self.deriv1.clone()
    }

    pub fn deriv2_fn(&self) -> Option<Eval> {
        self.deriv2.clone()
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Breakpoints of the continuous-part integral on `[a, b]`.
fn cut_points(d: &Derivator, f: &GFunction, a: f64, b: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = d
        .structural_points()
        .iter()
        .chain(f.breaks.iter())
        .copied()
        .filter(|&s| s > a && s < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫_a^b f ρ dt`, the absolutely continuous part only.
pub fn integrate_continuous_between(d: &Derivator, f: &GFunction, a: f64, b: f64) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    if !(b > a) {
        return Ok(total);
    }
    let scale = d.t_end();
    for piece in d.pieces() {
        if piece.density.is_zero() {
            continue;
        }
        let lo = piece.from.max(a);
        let hi = piece.to.min(b);
        if !(hi > lo) {
            continue;
        }
        let pts = cut_points(d, f, lo, hi);
        for w in pts.windows(2) {
            let tol = quadrature::DEFAULT_TOL * (w[1] - w[0]) / scale;
            let dens = &piece.density;
            total += quadrature::integrate(|s| f.eval(s) * dens.eval(s), w[0], w[1], tol)?;
        }
    }
    Ok(total)
}

fn jump_part(d: &Derivator, f: &GFunction, a: f64, b: f64) -> Result<Complex64> {
    let mut total = Complex64::new(0.0, 0.0);
    for j in d.jumps().iter().filter(|j| j.t >= a && j.t < b) {
        let v = f.eval(j.t);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { t: j.t });
        }
        total += v * j.d;
    }
    Ok(total)
}

/// `∫_{[s, t)} f dμ_g`: includes a jump at `s`, excludes one at `t`.
pub fn integrate_between(d: &Derivator, f: &GFunction, s: f64, t: f64) -> Result<Complex64> {
    for x in [s, t] {
        if !d.contains(x) {
            return Err(Error::Domain { t: x, t_end: d.t_end() });
        }
    }
    if !(t > s) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(integrate_continuous_between(d, f, s, t)? + jump_part(d, f, s, t)?)
}

/// `∫_{[0, t)} f dμ_g`.
pub fn integrate(d: &Derivator, f: &GFunction, t: f64) -> Result<Complex64> {
    integrate_between(d, f, 0.0, t)
}

struct Prefix {
    d: Derivator,
    f: GFunction,
    grid: Vec<f64>,
    acc: Vec<Complex64>,
    with_jumps: bool,
}

impl Prefix {
    fn build(d: &Derivator, f: &GFunction, n: usize, with_jumps: bool) -> Result<Self> {
        let grid = d.grid(n);
        let mut acc = Vec::with_capacity(grid.len());
        let mut run = Complex64::new(0.0, 0.0);
        acc.push(run);
        for w in grid.windows(2) {
            if with_jumps {
                let dj = d.jump(w[0]);
                if dj > 0.0 {
                    let v = f.eval(w[0]);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFinite { t: w[0] });
                    }
                    run += v * dj;
                }
            }
            run += integrate_continuous_between(d, f, w[0], w[1])?;
            acc.push(run);
        }
        Ok(Prefix { d: d.clone(), f: f.clone(), grid, acc, with_jumps })
    }

    fn eval(&self, t: f64) -> Complex64 {
        let i = match self.grid.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.acc[i],
            Err(0) => return self.acc[0],
            Err(i) => i - 1,
        };
        if i + 1 >= self.grid.len() {
            return self.acc[self.acc.len() - 1];
        }
        let x = self.grid[i];
        let mut v = self.acc[i];
        if self.with_jumps {
            let dj = self.d.jump(x);
            if dj > 0.0 {
                v += self.f.eval(x) * dj;
            }
        }
        match integrate_continuous_between(&self.d, &self.f, x, t) {
            Ok(c) => v + c,
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }
}

/// Prefix integral `Φ(t) = ∫_{[0, t)} f dμ_g`, tabulated on `d.grid(n)` with
/// one extra quadrature over the partial cell on evaluation. The result
/// carries `Φ'_g = f(t*)` as its analytic derivative.
pub fn cumulative(d: &Derivator, f: &GFunction, n: usize) -> Result<GFunction> {
    let table = Arc::new(Prefix::build(d, f, n, true)?);
    let dd = d.clone();
    let ff = f.clone();
    let mut out = GFunction::new(format!("∫{}", f.label()), move |t| table.eval(t))
        .with_deriv1(move |t| ff.eval(dd.star(t)));
    if let Some(fd) = f.deriv1_fn() {
        let dd = d.clone();
        out = out.with_deriv2(move |t| fd(dd.star(t)));
    }
    Ok(out)
}

/// Prefix integral of the absolutely continuous part only, `∫_0^t f ρ`.
pub fn cumulative_continuous(d: &Derivator, f: &GFunction, n: usize) -> Result<GFunction> {
    let table = Arc::new(Prefix::build(d, f, n, false)?);
    Ok(GFunction::new(format!("∫c{}", f.label()), move |t| table.eval(t)))
}

/// Residual of the integration-by-parts identity
/// `w1 w2 |_0^t = ∫ (w1' w2 + w1 w2' + w1' w2' Δg) dμ_g`.
pub fn integrate_by_parts_check(d: &Derivator, w1: &GFunction, w2: &GFunction, t: f64) -> Result<f64> {
    if !w1.has_deriv1() || !w2.has_deriv1() {
        return Err(Error::Contract("integration by parts needs both first g-derivatives".into()));
    }
    let (a, b) = (w1.clone(), w2.clone());
    let dd = d.clone();
    let h = GFunction::new("ibp", move |s| {
        let (a1, b1) = (a.deriv1(s).unwrap(), b.deriv1(s).unwrap());
        a1 * b.eval(s) + a.eval(s) * b1 + a1 * b1 * dd.jump(s)
    })
    .with_breaks(w1.breaks().iter().chain(w2.breaks()).copied());
    let lhs = w1.eval(t) * w2.eval(t) - w1.eval(0.0) * w2.eval(0.0);
    Ok((lhs - integrate(d, &h, t)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::{Density, Piece};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn e1() -> Derivator {
        Derivator::with_jumps(3.0, &[(1.0, 0.5)])
    }

    fn e2() -> Derivator {
        Derivator::new(
            3.0,
            0.0,
            vec![
                Piece { from: 0.0, to: 1.0, density: Density::Const { value: 1.0 } },
                Piece { from: 1.0, to: 2.0, density: Density::Zero },
                Piece { from: 2.0, to: 3.0, density: Density::Const { value: 1.0 } },
            ],
            vec![],
        )
    }

    #[test]
    fn half_open_semantics() {
        let d = e1();
        let one = GFunction::constant(c(1.0));
        assert!((integrate(&d, &one, 3.0).unwrap() - c(3.5)).norm() < 1e-13);
        assert!((integrate(&d, &one, 1.0).unwrap() - c(1.0)).norm() < 1e-13);
        let id = GFunction::real("t", |t| t);
        assert!((integrate(&d, &id, 2.0).unwrap() - c(2.5)).norm() < 1e-13);
        // Jump at the left endpoint is included.
        assert!((integrate_between(&d, &one, 1.0, 2.0).unwrap() - c(1.5)).norm() < 1e-13);
    }

    #[test]
    fn cumulative_matches_g() {
        let d = e1();
        let one = GFunction::constant(c(1.0));
        let phi = cumulative(&d, &one, 64).unwrap();
        for &t in &d.grid(64) {
            assert!((phi.eval(t).re - (d.g(t) - d.g0())).abs() < 1e-12);
        }
        let phi = cumulative(&e2(), &one, 64).unwrap();
        assert!((phi.eval(1.5).re - 1.0).abs() < 1e-13);
        let id = GFunction::real("t", |t| t);
        let phi = cumulative(&d, &id, 16).unwrap();
        assert!((phi.eval(2.0).re - 2.5).abs() < 1e-12);
        assert!((phi.eval(1.3) - integrate(&d, &id, 1.3).unwrap()).norm() < 1e-12);
        assert!((phi.eval(1.0) - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn non_finite_integrand() {
        let d = e1();
        let f = GFunction::real("bad", |t| if t > 2.0 { f64::NAN } else { 1.0 });
        assert!(matches!(integrate(&d, &f, 3.0), Err(Error::NonFinite { .. })));
        let f = GFunction::real("bad-at-jump", |t| if t == 1.0 { f64::INFINITY } else { 1.0 });
        assert!(matches!(integrate(&d, &f, 3.0), Err(Error::NonFinite { t }) if t == 1.0));
    }

    #[test]
    fn by_parts_identity() {
        let id3 = Derivator::identity(3.0);
        let w = GFunction::real("t", |t| t).with_deriv1(|_| c(1.0));
        assert!(integrate_by_parts_check(&id3, &w, &w, 2.0).unwrap() < 1e-8);
        let d = e1();
        let one = GFunction::constant(c(1.0));
        let w2 = GFunction::real("t^2", |t| t * t).with_deriv1(|t| if t == 1.0 { c(0.0) } else { c(2.0 * t) });
        assert!(integrate_by_parts_check(&d, &one, &w2, 2.5).unwrap() < 1e-8);
        assert!(integrate_by_parts_check(&d, &one, &GFunction::real("x", |t| t), 1.0).is_err());
    }
}
