// SPDX-License-Identifier: Apache-2.0
//! Brute-force references: left Riemann–Stieltjes sums, an explicit product
//! stepper for `u'_g = p u`, and classical RK4 for `x'' + P x' + Q x = f`.
//!
//! Deliberately naive. Nothing here calls into the quadrature, measure or
//! exponential code; only the [`Derivator`] is shared.

use num_complex::Complex64;

use crate::derivator::Derivator;
use crate::gmeasure::GFunction;

type C = Complex64;

/// One comparison between a computed value and an oracle value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub computed: C,
    pub reference: C,
    pub abs_error: f64,
    pub resolution: usize,
}

impl OracleReport {
    pub fn new(computed: C, reference: C, resolution: usize) -> Self {
        OracleReport { computed, reference, abs_error: (computed - reference).norm(), resolution }
    }
}

/// Cells `[a, b)` of `d.grid(n)` clipped to `[0, t)`.
fn cells(d: &Derivator, t: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let grid = d.grid(n.max(1));
    (0..grid.len() - 1)
        .map(move |i| (grid[i], grid[i + 1]))
        .filter(move |&(a, _)| a < t)
        .map(move |(a, b)| (a, b.min(t)))
}

/// `Σ f(s_i) (g(s_{i+1}) − g(s_i))` over grid cells inside `[0, t)`.
///
/// Jump abscissas are grid points, so the cell starting at `t_j` carries the
/// whole jump `d_j` and the left-point sample hits `f(t_j)` exactly.
pub fn riemann_stieltjes_sum(d: &Derivator, f: &GFunction, t: f64, n: usize) -> C {
    cells(d, t, n).map(|(a, b)| f.eval(a) * (d.g(b) - d.g(a))).sum()
}

/// Product integral `u_{i+1} = u_i (1 + p(s_i) Δg(s_i)) (1 + p(s_i) (g(s_{i+1}) − g(s_i+)))`.
pub fn step_first_order(d: &Derivator, p: &GFunction, u0: C, t: f64, n: usize) -> C {
    let mut u = u0;
    for (a, b) in cells(d, t, n) {
        let pa = p.eval(a);
        u *= (1.0 + pa * d.jump(a)) * (1.0 + pa * (d.g(b) - d.g_right(a)));
    }
    u
}

/// Classical RK4 on `(x, y)' = (y, −P y − Q x + f)` up to `t`.
///
/// Steps are aligned with `breaks`; within a step the coefficients are
/// sampled from the open step, so a left-continuous switch at the start of a
/// step is seen from the right.
#[allow(clippy::too_many_arguments)]
pub fn rk4_second_order(
    p: f64,
    q: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64) -> C,
    x0: C,
    v0: C,
    t: f64,
    n: usize,
    breaks: &[f64],
) -> C {
    if t <= 0.0 {
        return x0;
    }
    let mut knots = vec![0.0];
    knots.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < t));
    knots.push(t);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let target = t / n.max(1) as f64;
    let (mut x, mut y) = (x0, v0);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = ((b - a) / target).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        let lo = (a + 1e-12 * h).max(a.next_up());
        let rhs = |s: f64, x: C, y: C| {
            let s = s.max(lo);
            (y, -p * y - q(s) * x + f(s))
        };
        for i in 0..m {
            let s = a + i as f64 * h;
            let (k1x, k1y) = rhs(s, x, y);
            let (k2x, k2y) = rhs(s + 0.5 * h, x + 0.5 * h * k1x, y + 0.5 * h * k1y);
            let (k3x, k3y) = rhs(s + 0.5 * h, x + 0.5 * h * k2x, y + 0.5 * h * k2y);
            let (k4x, k4y) = rhs(s + h, x + h * k3x, y + h * k3y);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        }
    }
    x
}
