// SPDX-License-Identifier: Apache-2.0
//! `stieltjes`: g-integrals, g-exponentials, g-Wronskians and second-order
//! Stieltjes problems from JSON configurations.
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 numeric error, 4 precondition violation, 5 I/O error.

mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use stieltjes::gcalculus::{self, RegressiveFn};
use stieltjes::helmholtz::{self, HelmholtzSpec};
use stieltjes::mutation::{self, Mutation};
use stieltjes::solver::{self, ProblemSpec, ResidualMode, SolutionBundle};
use stieltjes::verify::{self, Level};
use stieltjes::wronskian::{self, SolutionPair};
use stieltjes::{gmeasure, Derivator, GFunction, DEFAULT_GRID_N};

use config::{Coef, Format, HelmholtzConfig, RunConfig};
use error::CliError;
use output::{Series, SolutionRow};

#[derive(Parser, Debug)]
#[command(name = "stieltjes", version, about = "Stieltjes calculus and second-order Stieltjes differential equations")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid resolution (cells over [0, T]); at least 16.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate t ↦ ∫_[0,t) f dμ_g.
    Integrate,
    /// Tabulate the g-exponential of the coefficient `p`.
    Gexp,
    /// Solve v'' + P v' + Q v = f with constant or piecewise-constant P, Q.
    Solve2,
    /// Full and simplified g-Wronskians of the homogeneous basis for `problem`.
    Wronskian,
    /// Helmholtz series v''_g + w0² v = f for g = t + δ χ_(t1,T], one per δ.
    Helmholtz {
        /// Comma-separated jump sizes; 0 gives the classical problem.
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
    },
    /// Run the verification suites.
    Verify {
        #[arg(long, default_value = "quick")]
        level: String,
        #[arg(long, hide = true)]
        inject: Vec<String>,
    },
}

struct Ctx {
    cfg: RunConfig,
    grid_n: usize,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn new(cli: &Cli, required: bool) -> Result<Self, CliError> {
        let cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None if required => return Err(CliError::Config("--config is required for this command".into())),
            None => RunConfig::default(),
        };
        let grid_n = cli.grid_n.or(cfg.grid_n).unwrap_or(DEFAULT_GRID_N);
        if grid_n < 16 {
            return Err(CliError::Config(format!("grid_n = {grid_n} is below 16")));
        }
        let out = cli.out.clone().or_else(|| cfg.output.clone());
        let format = cli.format.or(cfg.format).unwrap_or(Format::Csv);
        Ok(Ctx { cfg, grid_n, out, format })
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        output::emit(text, self.out.as_deref())
    }
}

fn coef_or_zero(c: &Option<Coef>, d: &Derivator, strict: bool) -> Result<GFunction, CliError> {
    match c {
        Some(c) => c.build(d, strict),
        None => Ok(GFunction::zero()),
    }
}

fn cmd_integrate(ctx: &Ctx) -> Result<(), CliError> {
    let d = ctx.cfg.derivator()?;
    let f = ctx.cfg.f.as_ref().ok_or_else(|| CliError::Config("missing `f`".into()))?.build(&d, false)?;
    let prefix = gmeasure::cumulative(&d, &f, ctx.grid_n)?;
    let mut rows = Vec::new();
    for t in d.grid(ctx.grid_n) {
        let v = prefix.eval(t);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(CliError::Numeric(format!("non-finite integral at t = {t}")));
        }
        rows.push((t, v));
    }
    ctx.emit(&output::integral_table(&rows, ctx.format))
}

fn cmd_gexp(ctx: &Ctx) -> Result<(), CliError> {
    let d = ctx.cfg.derivator()?;
    let p = ctx.cfg.f.as_ref().ok_or_else(|| CliError::Config("missing `f` (the exponent coefficient)".into()))?.build(&d, false)?;
    let e = gcalculus::exp_gfunction(&d, &RegressiveFn::new(&d, p)?, ctx.grid_n)?;
    let rows: Vec<(f64, Complex64)> = d.grid(ctx.grid_n).into_iter().map(|t| (t, e.eval(t))).collect();
    if let Some((t, _)) = rows.iter().find(|(_, v)| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(CliError::Numeric(format!("non-finite exponential at t = {t}")));
    }
    ctx.emit(&output::integral_table(&rows, ctx.format))
}

struct Problem {
    d: Derivator,
    spec: ProblemSpec,
    pair: Option<SolutionPair>,
    constant: Option<(Complex64, Complex64)>,
}

fn load_problem(ctx: &Ctx) -> Result<Problem, CliError> {
    let d = ctx.cfg.derivator()?;
    let pc = ctx.cfg.problem.as_ref().ok_or_else(|| CliError::Config("missing `problem`".into()))?;
    let zero = Coef::Value(config::ComplexValue::Real(0.0));
    let (pcoef, qcoef) = (pc.p.as_ref().unwrap_or(&zero), pc.q.as_ref().unwrap_or(&zero));
    if !(pcoef.is_piecewise_constant() && qcoef.is_piecewise_constant()) {
        return Err(CliError::Config("P and Q must be constant or piecewise-constant".into()));
    }
    let spec = ProblemSpec {
        p: pcoef.build(&d, true)?,
        q: qcoef.build(&d, true)?,
        f: coef_or_zero(&pc.f, &d, false)?,
        x0: pc.x0.value(),
        v0: pc.v0.value(),
    };
    let constant = pcoef.constant().zip(qcoef.constant());
    let pair = match constant {
        Some(_) => None,
        None => Some(solver::homogeneous_basis_piecewise(&d, &spec.p, &spec.q)?),
    };
    Ok(Problem { d, spec, pair, constant })
}

fn tabulate(d: &Derivator, sol: &SolutionBundle, spec: &ProblemSpec, n: usize) -> Result<Vec<SolutionRow>, CliError> {
    let mut rows = Vec::new();
    for t in d.grid(n) {
        let row = SolutionRow {
            t,
            v: sol.v.eval(t),
            dv: sol.v.d1(t)?,
            ddv: sol.v.d2(t)?,
            residual: solver::residual_at(d, sol, spec, t, ResidualMode::Analytic)?,
        };
        if ![row.v, row.dv, row.ddv].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(CliError::Numeric(format!("non-finite solution value at t = {t}")));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_tolerance(ctx: &Ctx, series: &[Series]) -> Result<(), CliError> {
    if let Some(tol) = ctx.cfg.tolerances.residual {
        for s in series {
            if s.max_residual() > tol || s.max_residual().is_nan() {
                return Err(CliError::Numeric(format!("max residual {:e} exceeds tolerance {tol:e}", s.max_residual())));
            }
        }
    }
    Ok(())
}

fn cmd_solve2(ctx: &Ctx) -> Result<(), CliError> {
    let pr = load_problem(ctx)?;
    let n = ctx.grid_n;
    let sol = match (pr.constant, &pr.pair) {
        (Some((p, q)), _) => solver::solve_const_ivp(&pr.d, p, q, &pr.spec.f, pr.spec.x0, pr.spec.v0, n)?,
        (None, Some(pair)) => solver::solve_ivp(&pr.d, &pr.spec, pair, n)?,
        (None, None) => unreachable!("piecewise problems carry a basis"),
    };
    let series = vec![Series { label: vec![("method".into(), sol.method.tag().into())], rows: tabulate(&pr.d, &sol, &pr.spec, n)? }];
    ctx.emit(&output::solution_table(&series, None, ctx.format))?;
    check_tolerance(ctx, &series)
}

fn cmd_wronskian(ctx: &Ctx) -> Result<(), CliError> {
    let pr = load_problem(ctx)?;
    let pair = match (pr.pair, pr.constant) {
        (Some(pair), _) => pair,
        (None, Some((p, q))) => solver::homogeneous_basis_const(&pr.d, p, q)?,
        (None, None) => unreachable!(),
    };
    let d = &pr.d;
    let w0 = wronskian::wronskian_simplified(d, &pair, 0.0)?;
    let mut rows = Vec::new();
    for t in d.grid(ctx.grid_n) {
        let w = wronskian::wronskian_g(d, &pair, t)?;
        let ws = wronskian::wronskian_simplified(d, &pair, t)?;
        let we = wronskian::wronskian_exp_form(d, &pr.spec.p, &pr.spec.q, w0, t)?;
        let rel = (w - wronskian::pq_factor(d, &pr.spec.p, &pr.spec.q, t) * ws).norm();
        rows.push((t, w, ws, rel, (ws - we).norm()));
    }
    let text = match ctx.format {
        Format::Csv => {
            let mut s = String::from("t,re_w,im_w,re_w_simplified,im_w_simplified,relation_residual,exp_form_residual\n");
            for (t, w, ws, rel, ex) in rows {
                s.push_str(&format!("{t},{},{},{},{},{rel:e},{ex:e}\n", w.re, w.im, ws.re, ws.im));
            }
            s
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = rows
                .into_iter()
                .map(|(t, w, ws, rel, ex)| {
                    serde_json::json!({"t": t, "w": [w.re, w.im], "w_simplified": [ws.re, ws.im],
                                       "relation_residual": rel, "exp_form_residual": ex})
                })
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({ "rows": rows })).unwrap() + "\n"
        }
    };
    ctx.emit(&text)
}

fn helmholtz_series(hc: &HelmholtzConfig, delta: f64, n: usize) -> Result<Series, CliError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(CliError::Config(format!("δ = {delta} must be a non-negative number")));
    }
    let d = helmholtz::delta_derivator(hc.t1, delta, hc.t_end);
    let f = coef_or_zero(&hc.f, &d, false)?;
    let spec = HelmholtzSpec::new(hc.w1, hc.w2, hc.t1, hc.x0.value(), hc.v0.value())
        .with_forcing(f)
        .regular_switch(delta == 0.0);
    let vh = helmholtz::helmholtz_homogeneous(&d, &spec)?.v;
    let vp = helmholtz::helmholtz_particular(&d, &spec, n)?.v;
    let (a, b) = (vh.clone(), vp.clone());
    let (a1, b1) = (vh.clone(), vp.clone());
    let v = GFunction::new("v", move |t| a.eval(t) + b.eval(t))
        .with_deriv1(move |t| a1.deriv1(t).unwrap() + b1.deriv1(t).unwrap())
        .with_deriv2(move |t| vh.deriv2(t).unwrap() + vp.deriv2(t).unwrap());
    let sol = SolutionBundle { v, method: solver::Method::Helmholtz };
    let rows = tabulate(&d, &sol, &spec.problem(&d), n)?;
    Ok(Series { label: vec![("delta".into(), delta.to_string()), ("method".into(), sol.method.tag().into())], rows })
}

fn cmd_helmholtz(ctx: &Ctx, deltas: Option<Vec<f64>>) -> Result<(), CliError> {
    let mut hc = ctx.cfg.helmholtz.clone().unwrap_or_default();
    if let Some(ds) = deltas {
        hc.deltas = ds;
    }
    if hc.deltas.is_empty() {
        hc.deltas = HelmholtzConfig::default().deltas;
    }
    let series = hc.deltas.iter().map(|&delta| helmholtz_series(&hc, delta, ctx.grid_n)).collect::<Result<Vec<_>, _>>()?;
    ctx.emit(&output::solution_table(&series, Some("delta"), ctx.format))?;
    check_tolerance(ctx, &series)
}

fn cmd_verify(ctx: &Ctx, level: &str, inject: &[String]) -> Result<(), CliError> {
    let level = Level::parse(level).ok_or_else(|| CliError::Config(format!("unknown level `{level}` (quick|full)")))?;
    let mut guards = Vec::new();
    for name in inject {
        let m = Mutation::parse(name).ok_or_else(|| CliError::Config(format!("unknown mutation `{name}`")))?;
        guards.push(mutation::inject(m));
    }
    let rows = verify::run(level);
    drop(guards);
    ctx.emit(&output::verify_table(&rows, ctx.format))?;
    let failed: Vec<&verify::Row> = rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {}: max residual {:e} > {:e}{}", r.name, r.max_residual, r.tolerance, r.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed.len()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Integrate => cmd_integrate(&Ctx::new(&cli, true)?),
        Command::Gexp => cmd_gexp(&Ctx::new(&cli, true)?),
        Command::Solve2 => cmd_solve2(&Ctx::new(&cli, true)?),
        Command::Wronskian => cmd_wronskian(&Ctx::new(&cli, true)?),
        Command::Helmholtz { delta } => cmd_helmholtz(&Ctx::new(&cli, false)?, delta.clone()),
        Command::Verify { level, inject } => cmd_verify(&Ctx::new(&cli, false)?, level, inject),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
