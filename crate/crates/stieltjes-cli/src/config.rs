// SPDX-License-Identifier: Apache-2.0
//! JSON run configuration.

use std::path::PathBuf;
use std::sync::Arc;

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use num_complex::Complex64;
use serde::Deserialize;
use stieltjes::solver;
use stieltjes::{Derivator, DerivatorConfig, GFunction, Shape};

use crate::error::CliError;

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl Default for ComplexValue {
    fn default() -> Self {
        ComplexValue::Real(0.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Segment {
    pub until: f64,
    pub value: ComplexValue,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefSpec {
    Const { value: ComplexValue },
    /// Left-continuous: `value` applies on `(previous until, until]`.
    PiecewiseConst { segments: Vec<Segment> },
    /// `coeffs[k]` multiplies `t^k`.
    Poly { coeffs: Vec<ComplexValue> },
    /// Expressions in `t`; `sin`, `cos`, `exp`, `ln`, `sqrt`, ... and the
    /// constants `pi` and `e` are available.
    Expr {
        re: String,
        #[serde(default)]
        im: Option<String>,
    },
}

/// A coefficient: a bare number, an `[re, im]` pair, or a tagged object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Value(ComplexValue),
    Spec(CoefSpec),
}

impl Coef {
    pub fn constant(&self) -> Option<Complex64> {
        match self {
            Coef::Value(v) | Coef::Spec(CoefSpec::Const { value: v }) => Some(v.value()),
            _ => None,
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, Coef::Value(_) | Coef::Spec(CoefSpec::Const { .. } | CoefSpec::PiecewiseConst { .. }))
    }

    /// Builds the function. For equation coefficients (`strict`) breaks of a
    /// piecewise-constant coefficient must be jumps of `g`.
    pub fn build(&self, d: &Derivator, strict: bool) -> Result<GFunction, CliError> {
        match self {
            Coef::Value(v) => Ok(GFunction::constant(v.value())),
            Coef::Spec(spec) => match spec {
                CoefSpec::Const { value } => Ok(GFunction::constant(value.value())),
                CoefSpec::PiecewiseConst { segments } => {
                    let segs: Vec<(f64, Complex64)> = segments.iter().map(|s| (s.until, s.value.value())).collect();
                    if strict {
                        Ok(solver::piecewise_const(d, &segs)?)
                    } else {
                        loose_piecewise(d, segs)
                    }
                }
                CoefSpec::Poly { coeffs } => {
                    let c: Vec<Complex64> = coeffs.iter().map(|v| v.value()).collect();
                    Ok(GFunction::new("poly", move |t| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * t + k)))
                }
                CoefSpec::Expr { re, im } => {
                    let re = Expr::parse(re)?;
                    let im = im.as_deref().map(Expr::parse).transpose()?;
                    Ok(GFunction::new("expr", move |t| {
                        Complex64::new(re.eval(t), im.as_ref().map_or(0.0, |e| e.eval(t)))
                    }))
                }
            },
        }
    }
}

fn loose_piecewise(d: &Derivator, segs: Vec<(f64, Complex64)>) -> Result<GFunction, CliError> {
    if segs.is_empty() || segs.iter().any(|s| s.0.is_nan()) || segs.windows(2).any(|w| w[0].0 >= w[1].0) || segs[segs.len() - 1].0 < d.t_end() {
        return Err(CliError::Config("piecewise segments must increase and reach T".into()));
    }
    let cuts: Vec<f64> = segs[..segs.len() - 1].iter().map(|s| s.0).collect();
    let table = segs.clone();
    Ok(GFunction::new("piecewise", move |t| table.iter().find(|s| t <= s.0).unwrap_or(&table[table.len() - 1]).1)
        .with_shape(Shape::Piecewise(segs))
        .with_breaks(cuts))
}

const FUNCTIONS: [&str; 13] =
    ["sin", "cos", "tan", "exp", "ln", "log10", "sqrt", "abs", "sinh", "cosh", "tanh", "atan", "pow"];

/// Rewrites bare function names to evalexpr's `math::` namespace.
fn qualify(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphabetic() || chars[i] == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == ':') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let call = j < chars.len() && chars[j] == '(';
            if call && FUNCTIONS.contains(&word.as_str()) {
                out.push_str("math::");
                out.push_str(&word);
            } else {
                out.push_str(&word);
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

struct Expr {
    tree: Arc<Node<DefaultNumericTypes>>,
}

impl Expr {
    fn parse(src: &str) -> Result<Self, CliError> {
        let tree = build_operator_tree::<DefaultNumericTypes>(&qualify(src))
            .map_err(|e| CliError::Config(format!("expression `{src}`: {e}")))?;
        let probe = Expr { tree: Arc::new(tree) };
        probe.try_eval(0.0).map_err(|e| CliError::Config(format!("expression `{src}`: {e}")))?;
        Ok(probe)
    }

    fn try_eval(&self, t: f64) -> Result<f64, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (k, v) in [("t", t), ("pi", std::f64::consts::PI), ("e", std::f64::consts::E)] {
            ctx.set_value(k.into(), Value::Float(v)).map_err(|e| e.to_string())?;
        }
        self.tree.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    }

    fn eval(&self, t: f64) -> f64 {
        self.try_eval(t).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ProblemConfig {
    #[serde(rename = "P", default)]
    pub p: Option<Coef>,
    #[serde(rename = "Q", default)]
    pub q: Option<Coef>,
    #[serde(default)]
    pub f: Option<Coef>,
    #[serde(default)]
    pub x0: ComplexValue,
    #[serde(default)]
    pub v0: ComplexValue,
}

#[derive(Debug, Clone, Deserialize)]
pub struct HelmholtzConfig {
    pub w1: f64,
    pub w2: f64,
    #[serde(default = "one")]
    pub t1: f64,
    #[serde(rename = "T", default = "three")]
    pub t_end: f64,
    #[serde(default = "unit")]
    pub x0: ComplexValue,
    #[serde(default)]
    pub v0: ComplexValue,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub f: Option<Coef>,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

fn unit() -> ComplexValue {
    ComplexValue::Real(1.0)
}

impl Default for HelmholtzConfig {
    fn default() -> Self {
        HelmholtzConfig {
            w1: 1.0,
            w2: 2.0,
            t1: 1.0,
            t_end: 3.0,
            x0: unit(),
            v0: ComplexValue::default(),
            deltas: vec![0.0, 0.2, 0.5],
            f: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Tolerances {
    #[serde(default)]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub derivator: Option<DerivatorConfig>,
    #[serde(default)]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub f: Option<Coef>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub helmholtz: Option<HelmholtzConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn derivator(&self) -> Result<Derivator, CliError> {
        let cfg = self.derivator.as_ref().ok_or_else(|| CliError::Config("missing `derivator`".into()))?;
        Derivator::from_config(cfg).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qualifies_bare_functions() {
        assert_eq!(qualify("sin(t) + cos (2*t)"), "math::sin(t) + math::cos (2*t)");
        assert_eq!(qualify("math::sin(t)"), "math::sin(t)");
        assert_eq!(qualify("sine + t"), "sine + t");
    }

    #[test]
    fn expressions_evaluate() {
        let e = Expr::parse("sin(pi*t) + t^2").unwrap();
        assert!((e.eval(0.5) - 1.25).abs() < 1e-15);
        assert!(Expr::parse("sin(").is_err());
        assert!(Expr::parse("sqrt(t - 1)").unwrap().eval(0.0).is_nan());
    }

    #[test]
    fn coefficients_parse() {
        let c: Coef = serde_json::from_str("2.5").unwrap();
        assert_eq!(c.constant(), Some(Complex64::new(2.5, 0.0)));
        let c: Coef = serde_json::from_str("[1, -2]").unwrap();
        assert_eq!(c.constant(), Some(Complex64::new(1.0, -2.0)));
        let c: Coef = serde_json::from_str(r#"{"kind": "piecewise-const", "segments": [{"until": 1, "value": 1}, {"until": 3, "value": [0, 1]}]}"#).unwrap();
        assert!(c.is_piecewise_constant());
        let d = Derivator::with_jumps(3.0, &[(1.0, 0.5)]);
        assert_eq!(c.build(&d, true).unwrap().eval(2.0), Complex64::new(0.0, 1.0));
        let c: Coef = serde_json::from_str(r#"{"kind": "poly", "coeffs": [1, 0, 2]}"#).unwrap();
        assert_eq!(c.build(&d, false).unwrap().eval(2.0), Complex64::new(9.0, 0.0));
    }
}
