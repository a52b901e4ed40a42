// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C;
use proptest::prelude::*;
use stieltjes::gcalculus::{self, RegressiveFn};
use stieltjes::{gmeasure, solver, wronskian, Density, Derivator, GFunction, Jump, Piece};

fn derivator() -> impl Strategy<Value = Derivator> {
    (prop::collection::vec((0.1f64..2.9, 0.05f64..0.6), 0..=3), 0.5f64..1.5, prop::bool::ANY).prop_filter_map(
        "jumps too close",
        |(mut jumps, rho, constancy)| {
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            if jumps.windows(2).any(|w| w[1].0 - w[0].0 < 0.05) {
                return None;
            }
            let jumps: Vec<Jump> = jumps.into_iter().map(|(t, d)| Jump { t, d }).collect();
            let pieces = if constancy {
                vec![
                    Piece { from: 0.0, to: 1.2, density: Density::Const { value: rho } },
                    Piece { from: 1.2, to: 1.8, density: Density::Zero },
                    Piece { from: 1.8, to: 3.0, density: Density::Poly { coeffs: vec![rho, 0.2] } },
                ]
            } else {
                vec![Piece { from: 0.0, to: 3.0, density: Density::Const { value: rho } }]
            };
            let d = Derivator::new(3.0, 0.0, pieces, jumps);
            d.validate().is_empty().then_some(d)
        },
    )
}

fn complex(r: f64) -> impl Strategy<Value = C> {
    (-r..r, -r..r).prop_map(|(a, b)| C::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn g_is_nondecreasing(d in derivator(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.g(lo) <= d.g(hi));
        prop_assert!(d.g(lo) <= d.g_right(lo));
    }

    #[test]
    fn integral_is_additive(d in derivator(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (s, t) = if a <= b { (a, b) } else { (b, a) };
        let f = GFunction::real("cos + t", |u| u.cos() + u);
        let whole = gmeasure::integrate(&d, &f, t).unwrap();
        let split = gmeasure::integrate(&d, &f, s).unwrap() + gmeasure::integrate_between(&d, &f, s, t).unwrap();
        prop_assert!((whole - split).norm() < 1e-10);
    }

    #[test]
    fn integral_of_one_measures_g(d in derivator(), t in 0.0f64..3.0) {
        let v = gmeasure::integrate(&d, &GFunction::constant(C::new(1.0, 0.0)), t).unwrap();
        prop_assert!((v - C::new(d.g(t) - d.g(0.0), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn ftc_for_exponentials(d in derivator(), lambda in complex(1.0), t in 0.0f64..3.0) {
        let f = gcalculus::exp_const_gfunction(&d, lambda).unwrap();
        let df = f.first_derivative().unwrap();
        let lhs = gmeasure::integrate(&d, &df, t).unwrap();
        prop_assert!((lhs - (f.eval(t) - f.eval(0.0))).norm() < 1e-8);
    }

    #[test]
    fn exponential_laws(d in derivator(), p in complex(0.8), q in complex(0.8), t in 0.0f64..3.0) {
        let (p, q) = (GFunction::constant(p), GFunction::constant(q));
        prop_assert!(gcalculus::g_exp_product_check(&d, &p, &q, t).unwrap() < 1e-10);
        prop_assert!(gcalculus::g_exp_inverse_check(&d, &p, t).unwrap() < 1e-10);
    }

    #[test]
    fn exponential_never_vanishes(d in derivator(), p in complex(1.5), t in 0.0f64..3.0) {
        if let Ok(r) = RegressiveFn::constant(&d, p) {
            prop_assert!(gcalculus::g_exponential(&d, &r, t).unwrap().norm() > 0.0);
        }
    }

    #[test]
    fn product_rule(d in derivator(), a in complex(1.0), b in complex(1.0), t in 0.0f64..3.0) {
        let f1 = gcalculus::exp_const_gfunction(&d, a).unwrap();
        let f2 = gcalculus::polynomial_exp_gfunction(&d, b).unwrap();
        prop_assert!(gcalculus::product_rule_residual(&d, &f1, &f2, t).unwrap() < 1e-6);
    }

    #[test]
    fn wronskian_identities(d in derivator(), p in complex(1.5), q in complex(1.5), t in 0.0f64..3.0) {
        let pair = solver::homogeneous_basis_const(&d, p, q);
        prop_assume!(pair.is_ok());
        let pair = pair.unwrap();
        let (pf, qf) = (GFunction::constant(p), GFunction::constant(q));
        let scale = wronskian::wronskian_g(&d, &pair, t).unwrap().norm().max(1.0);
        prop_assert!(wronskian::wronskian_relation_residual(&d, &pair, &pf, &qf, t).unwrap() < 1e-8 * scale);
        let w0 = wronskian::wronskian_simplified(&d, &pair, 0.0).unwrap();
        let ws = wronskian::wronskian_simplified(&d, &pair, t).unwrap();
        let we = wronskian::wronskian_exp_form(&d, &pf, &qf, w0, t).unwrap();
        prop_assert!((ws - we).norm() < 1e-8 * ws.norm().max(1.0));
    }

    #[test]
    fn constant_solutions_satisfy_the_equation(d in derivator(), p in complex(1.5), q in complex(1.5), x0 in complex(1.0), v0 in complex(1.0)) {
        let sol = solver::solve_const_ivp(&d, p, q, &GFunction::zero(), x0, v0, 256);
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        let spec = solver::ProblemSpec::constant(p, q, GFunction::zero(), x0, v0);
        let scale = d.grid(32).iter().map(|&t| sol.v.eval(t).norm()).fold(1.0, f64::max);
        prop_assert!(solver::residual(&d, &sol, &spec, 32, solver::ResidualMode::Analytic).unwrap() < 1e-9 * scale);
        prop_assert!((sol.v.eval(0.0) - x0).norm() < 1e-12);
    }
}
