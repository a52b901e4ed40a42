// SPDX-License-Identifier: Apache-2.0
//! Verification suites: each identity is evaluated on a small corpus and
//! reported as one row with its largest residual and tolerance.

use std::f64::consts::E;

use num_complex::Complex64;

use crate::derivator::{Density, Derivator, Piece};
use crate::error::Result;
use crate::gcalculus::{self, RegressiveFn};
use crate::gmeasure::{self, GFunction};
use crate::helmholtz::{self, HelmholtzSpec};
use crate::oracle;
use crate::solver::{self, ProblemSpec, ResidualMode, SolutionBundle};
use crate::wronskian::{self, SolutionPair};

type C = Complex64;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quick" => Some(Level::Quick),
            "full" => Some(Level::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Error raised while evaluating the suite, if any.
    pub error: Option<String>,
}

fn row(name: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> Row {
    let (max_residual, error) = match f() {
        Ok(r) => (r, None),
        Err(e) => (f64::INFINITY, Some(e.to_string())),
    };
    Row { name: name.to_string(), max_residual, tolerance, pass: max_residual.is_finite() && max_residual <= tolerance, error }
}

/// Derivators used by the suites: one jump, three jumps, and a constancy
/// interval followed by a jump with a nonconstant density.
pub fn corpus() -> Vec<(&'static str, Derivator)> {
    let e2 = Derivator::new(
        3.0,
        0.0,
        vec![
            Piece { from: 0.0, to: 1.0, density: Density::Const { value: 1.0 } },
            Piece { from: 1.0, to: 2.0, density: Density::Zero },
            Piece { from: 2.0, to: 3.0, density: Density::Poly { coeffs: vec![1.0, 0.5] } },
        ],
        vec![crate::derivator::Jump { t: 2.5, d: 0.4 }],
    );
    vec![
        ("one-jump", Derivator::with_jumps(3.0, &[(1.0, 0.5)])),
        ("three-jumps", Derivator::with_jumps(3.0, &[(0.7, 0.3), (1.6, 0.8), (2.4, 0.25)])),
        ("constancy", e2),
    ]
}

fn sample_points(d: &Derivator, n: usize) -> Vec<f64> {
    let mut pts = d.grid(n);
    pts.extend(d.jumps().iter().map(|j| j.t));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn max_over(pts: &[f64], mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &t in pts {
        let r = f(t)?;
        if r.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

const LAMBDAS: [C; 3] = [C::new(1.0, 0.0), C::new(-0.5, 1.0), C::new(0.0, -2.0)];

fn ftc() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        for l in LAMBDAS {
            let f = gcalculus::exp_const_gfunction(&d, l)?;
            let df = f.first_derivative().unwrap();
            let f0 = f.eval(0.0);
            worst = worst.max(max_over(&d.grid(24), |t| Ok((gmeasure::integrate(&d, &df, t)? - (f.eval(t) - f0)).norm()))?);
        }
    }
    Ok(worst)
}

fn product_rule() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        let f1 = gcalculus::exp_const_gfunction(&d, LAMBDAS[0])?;
        let f2 = gcalculus::polynomial_exp_gfunction(&d, LAMBDAS[1])?;
        let mut pts = sample_points(&d, 24);
        pts.extend(d.constancy().iter().map(|&(a, b)| 0.5 * (a + b)));
        worst = worst.max(max_over(&pts, |t| gcalculus::product_rule_residual(&d, &f1, &f2, t))?);
    }
    Ok(worst)
}

fn coefficient_pairs() -> Vec<(GFunction, GFunction)> {
    vec![
        (GFunction::constant(c(0.7)), GFunction::constant(C::new(-0.2, 1.1))),
        (GFunction::real("sin", f64::sin), GFunction::real("0.3t", |t| 0.3 * t)),
    ]
}

fn exp_product() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        for (p, q) in coefficient_pairs() {
            worst = worst.max(max_over(&sample_points(&d, 12), |t| {
                let scale = gcalculus::g_exponential(&d, &RegressiveFn::new(&d, gcalculus::circle_plus(&d, &p, &q))?, t)?.norm().max(1.0);
                Ok(gcalculus::g_exp_product_check(&d, &p, &q, t)? / scale)
            })?);
        }
    }
    Ok(worst)
}

fn exp_inverse() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        for (p, _) in coefficient_pairs() {
            worst = worst.max(max_over(&sample_points(&d, 12), |t| gcalculus::g_exp_inverse_check(&d, &p, t))?);
        }
    }
    Ok(worst)
}

/// Relative distance between `exp_g(λ; T)` and the product stepper after one
/// Richardson step, which cancels the stepper's first-order error.
fn exp_vs_stepper() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        for l in LAMBDAS {
            let t = d.t_end();
            let exact = gcalculus::exp_const(&d, l, t)?;
            let p = GFunction::constant(l);
            let s1 = oracle::step_first_order(&d, &p, c(1.0), t, 3000);
            let s2 = oracle::step_first_order(&d, &p, c(1.0), t, 6000);
            worst = worst.max((2.0 * s2 - s1 - exact).norm() / exact.norm());
        }
    }
    Ok(worst)
}

const PQ: [(C, C); 4] = [
    (C::new(1.5, 0.0), C::new(0.5, 0.0)),
    (C::new(0.4, 0.0), C::new(1.3, 0.0)),
    (C::new(2.0, 0.0), C::new(1.0, 0.0)),
    (C::new(0.0, 1.0), C::new(0.5, 0.0)),
];

fn helmholtz_e1() -> (Derivator, HelmholtzSpec) {
    (Derivator::with_jumps(3.0, &[(1.0, 0.5)]), HelmholtzSpec::new(1.0, 2.0, 1.0, c(1.0), c(0.0)))
}

fn basis_cases() -> Result<Vec<(Derivator, SolutionPair, GFunction, GFunction)>> {
    let mut out = Vec::new();
    for (_, d) in corpus() {
        for (p, q) in PQ {
            let pair = solver::homogeneous_basis_const(&d, p, q)?;
            out.push((d.clone(), pair, GFunction::constant(p), GFunction::constant(q)));
        }
    }
    let (d, spec) = helmholtz_e1();
    let problem = spec.problem(&d);
    out.push((d.clone(), helmholtz::helmholtz_basis(&d, &spec)?, problem.p, problem.q));
    Ok(out)
}

fn wronskian_relation() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (d, pair, p, q) in basis_cases()? {
        worst = worst.max(max_over(&sample_points(&d, 16), |t| wronskian::wronskian_relation_residual(&d, &pair, &p, &q, t))?);
    }
    Ok(worst)
}

fn wronskian_exp_form() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (d, pair, p, q) in basis_cases()? {
        let w0 = wronskian::wronskian_simplified(&d, &pair, 0.0)?;
        worst = worst.max(max_over(&sample_points(&d, 16), |t| {
            Ok((wronskian::wronskian_simplified(&d, &pair, t)? - wronskian::wronskian_exp_form(&d, &p, &q, w0, t)?).norm())
        })?);
    }
    Ok(worst)
}

/// `y1 = g`, `y2 = e^t` before the jump and `2e^t` after, on `g = t − 1`
/// plus a unit jump at 1: the full Wronskian vanishes at the jump although
/// its left limit is `−e`.
pub fn wronskian_counterexample() -> (Derivator, SolutionPair) {
    let d = Derivator::new(2.0, -1.0, vec![Piece { from: 0.0, to: 2.0, density: Density::Const { value: 1.0 } }], vec![
        crate::derivator::Jump { t: 1.0, d: 1.0 },
    ]);
    let dd = d.clone();
    let y1 = GFunction::real("g", move |t| dd.g(t)).with_deriv1(|_| c(1.0)).with_deriv2(|_| c(0.0));
    let scale = |t: f64| if t <= 1.0 { 1.0 } else { 2.0 };
    let y2 = GFunction::real("y2", move |t| scale(t) * t.exp())
        .with_deriv1(move |t| c(scale(t) * t.exp()))
        .with_deriv2(move |t| c(if t == 1.0 { E } else { scale(t) * t.exp() }))
        .with_breaks([1.0]);
    (d, SolutionPair::new(y1, y2))
}

fn counterexample() -> Result<f64> {
    let (d, pair) = wronskian_counterexample();
    Ok(wronskian::wronskian_g(&d, &pair, 1.0)?.norm())
}

fn forcing() -> GFunction {
    GFunction::real("cos", f64::cos)
}

fn cross_path() -> Result<f64> {
    let mut worst = 0.0_f64;
    let (_, d) = &corpus()[1];
    for (p, q) in PQ {
        let (x0, v0) = (c(1.0), C::new(-0.5, 0.25));
        let a = solver::solve_const_ivp(d, p, q, &forcing(), x0, v0, 1024)?;
        let b = solver::solve_const_factorization(d, p, q, &forcing(), x0, v0, 1024)?;
        let pair = solver::homogeneous_basis_const(d, p, q)?;
        let s = solver::solve_ivp(d, &ProblemSpec::constant(p, q, forcing(), x0, v0), &pair, 1024)?;
        worst = worst.max(max_over(&d.grid(64), |t| {
            let (va, vb, vs) = (a.v.eval(t), b.v.eval(t), s.v.eval(t));
            Ok((va - vb).norm().max((va - vs).norm()).max((vb - vs).norm()))
        })?);
    }
    Ok(worst)
}

fn particular_residual() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus().into_iter().take(2) {
        for (p, q) in [PQ[0], PQ[1]] {
            let pair = solver::homogeneous_basis_const(&d, p, q)?;
            let spec = ProblemSpec::constant(p, q, forcing(), c(0.0), c(0.0));
            let vp = solver::particular_solution(&d, &spec.p, &spec.q, &spec.f, &pair, 512)?;
            worst = worst.max(solver::residual(&d, &vp, &spec, 128, ResidualMode::Numeric)?);
        }
    }
    Ok(worst)
}

fn analytic_residual() -> Result<f64> {
    let mut worst = 0.0_f64;
    for (_, d) in corpus() {
        for (p, q) in PQ {
            let spec = ProblemSpec::constant(p, q, forcing(), c(1.0), c(0.5));
            let s = solver::solve_const_ivp(&d, p, q, &spec.f, spec.x0, spec.v0, 512)?;
            worst = worst.max(solver::residual(&d, &s, &spec, 256, ResidualMode::Analytic)?);
        }
    }
    Ok(worst)
}

fn alpha_cross_check() -> Result<f64> {
    let (d, spec) = helmholtz_e1();
    let a = helmholtz::alpha_closed_form(&d, &spec)?;
    Ok(a.max_relative_deviation(&helmholtz::alpha_linear_solve(&d, &spec)?))
}

fn gcond() -> Result<f64> {
    let (d, spec) = helmholtz_e1();
    let a = helmholtz::alpha_closed_form(&d, &spec)?;
    let (r1, r2) = helmholtz::gcond_residuals(&d, &spec, &a)?;
    Ok(r1.max(r2))
}

fn helmholtz_basis_residual() -> Result<f64> {
    let (d, spec) = helmholtz_e1();
    let pair = helmholtz::helmholtz_basis(&d, &spec)?;
    let problem = ProblemSpec { x0: c(0.0), v0: c(0.0), ..spec.problem(&d) };
    let mut worst = 0.0_f64;
    for y in [pair.y1, pair.y2] {
        let sol = SolutionBundle { v: y, method: solver::Method::Helmholtz };
        worst = worst.max(solver::residual(&d, &sol, &problem, 128, ResidualMode::Numeric)?);
    }
    Ok(worst)
}

fn helmholtz_particular() -> Result<f64> {
    let (d, spec) = helmholtz_e1();
    let spec = spec.with_forcing(GFunction::constant(c(1.0)));
    let vp = helmholtz::helmholtz_particular(&d, &spec, 1024)?;
    let pair = helmholtz::helmholtz_basis(&d, &spec)?;
    let problem = spec.problem(&d);
    let generic = solver::particular_solution(&d, &problem.p, &problem.q, &problem.f, &pair, 1024)?;
    max_over(&d.grid(64), |t| Ok((vp.v.eval(t) - generic.v.eval(t)).norm()))
}

const SWEEP: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

fn sweep() -> Result<Vec<helmholtz::LimitRow>> {
    helmholtz::classical_limit_study(1.0, 2.0, 1.0, 3.0, c(1.0), c(0.0), &SWEEP, 1024)
}

fn q_zero() -> Result<f64> {
    let d = Derivator::with_jumps(3.0, &[(1.0, 0.5)]);
    let p = solver::piecewise_const(&d, &[(1.0, c(0.5)), (3.0, c(-0.3))])?;
    let q = GFunction::zero();
    let y1 = GFunction::constant(c(1.0));
    let y2 = solver::second_homogeneous_solution(&d, &p, &q, &y1, 1024)?;
    let spec = ProblemSpec { p: p.clone(), q, f: forcing(), x0: c(1.0), v0: c(0.5) };
    let a = solver::solve_ivp(&d, &spec, &SolutionPair::new(y1, y2), 1024)?;
    let b = solver::solve_q_zero_closed_form(&d, &p, &spec.f, spec.x0, spec.v0, 1024)?;
    max_over(&d.grid(64), |t| Ok((a.v.eval(t) - b.v.eval(t)).norm()))
}

/// Runs the suites. Quick covers every identity on small grids; full adds
/// the Helmholtz limit study and the variable-coefficient example.
pub fn run(level: Level) -> Vec<Row> {
    let mut rows = vec![
        row("ftc roundtrip", 1e-8, ftc),
        row("product rule", 1e-6, product_rule),
        row("exp product law", 1e-10, exp_product),
        row("exp inverse law", 1e-10, exp_inverse),
        row("exp vs stepping oracle", 2e-4, exp_vs_stepper),
        row("wronskian relation", 1e-8, wronskian_relation),
        row("wronskian exponential form", 1e-8, wronskian_exp_form),
        row("wronskian counterexample", 1e-12, counterexample),
        row("solver cross-path", 1e-7, cross_path),
        row("particular-solution residual", 1e-6, particular_residual),
        row("closed-form residual", 1e-9, analytic_residual),
        row("alpha cross-check", 1e-12, alpha_cross_check),
        row("gcond matching", 1e-10, gcond),
    ];
    if level == Level::Full {
        rows.push(row("helmholtz basis residual", 1e-6, helmholtz_basis_residual));
        rows.push(row("helmholtz particular vs generic", 1e-7, helmholtz_particular));
        let study = sweep();
        rows.push(row("delta-sweep monotone", 1.0 - 1e-12, || {
            let s = study.clone()?;
            Ok(s.windows(2).map(|w| w[1].max_error / w[0].max_error).fold(0.0, f64::max))
        }));
        rows.push(row("delta-sweep contraction", 0.1, || {
            let s = study?;
            Ok(s[s.len() - 1].max_error / s[0].max_error)
        }));
        rows.push(row("classical second-derivative jump", 1e-3, || {
            let (jump, v1) = helmholtz::classical_second_derivative_jump(1.0, 2.0, 1.0, 3.0, c(1.0), c(0.0))?;
            Ok((jump / v1 - 3.0).abs() / 3.0)
        }));
        rows.push(row("g-continuity of second derivative", 1e-6, || {
            let (d, spec) = helmholtz_e1();
            helmholtz::jump_second_derivative_continuity(&d, &spec)
        }));
        rows.push(row("q-zero closed form vs varpar", 1e-7, q_zero));
    }
    rows
}
