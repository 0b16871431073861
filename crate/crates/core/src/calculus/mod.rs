//! Differentiation, numeric evaluation, the finite-difference oracle, and
//! limit probing at +infinity.

mod eval;
mod fd;
mod limits;

pub use eval::{eval_exact, evaluate};
pub use fd::finite_difference;
pub use limits::{limit_probe, LimitKind, LimitVerdict};

use crate::config::CalcConfig;
use crate::error::{Error, Result};
use crate::expr::{canonicalize, Expr};

/// First derivative of `e` with respect to `var`, in canonical form.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    canonicalize(&d(e, var))
}

/// n-fold [`differentiate`] with canonicalization between steps; n = 0
/// returns the canonicalized input. Enforces the configured order cap and
/// the node-count cap on each intermediate derivative.
pub fn nth_derivative(e: &Expr, var: &str, n: usize, cfg: &CalcConfig) -> Result<Expr> {
    if n > cfg.n_max {
        return Err(Error::OrderTooLarge {
            requested: n,
            max: cfg.n_max,
        });
    }
    let mut cur = canonicalize(e);
    for _ in 0..n {
        cur = differentiate(&cur, var);
        let nodes = cur.node_count();
        if nodes > cfg.node_cap {
            return Err(Error::ExpressionTooLarge {
                nodes,
                cap: cfg.node_cap,
            });
        }
    }
    Ok(cur)
}

fn d(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::int(0),
        Expr::Var(name) => {
            if name == var {
                Expr::int(1)
            } else {
                Expr::int(0)
            }
        }
        Expr::Add(terms) => Expr::Add(terms.iter().map(|t| d(t, var)).collect()),
        Expr::Mul(factors) => {
            let mut terms = Vec::with_capacity(factors.len());
            for i in 0..factors.len() {
                let mut fs = Vec::with_capacity(factors.len());
                fs.push(d(&factors[i], var));
                for (j, f) in factors.iter().enumerate() {
                    if j != i {
                        fs.push(f.clone());
                    }
                }
                terms.push(Expr::Mul(fs));
            }
            Expr::Add(terms)
        }
        Expr::Pow(base, exponent) => {
            if !exponent.contains_var(var) {
                // Power rule. Used whenever the exponent is free of the
                // variable (not only for constants) so that x^(1/2) keeps its
                // natural domain instead of detouring through ln(x).
                let w = (**exponent).clone();
                let wm1 = Expr::add(vec![w.clone(), Expr::int(-1)]);
                Expr::mul(vec![w, Expr::pow((**base).clone(), wm1), d(base, var)])
            } else {
                // u^w = e^(w ln u): derivative u^w * (w' ln u + w u'/u).
                let u = (**base).clone();
                let w = (**exponent).clone();
                let left = Expr::mul(vec![d(exponent, var), Expr::ln(u.clone())]);
                let right = Expr::mul(vec![
                    w,
                    d(base, var),
                    Expr::pow(u, Expr::int(-1)),
                ]);
                Expr::mul(vec![e.clone(), Expr::add(vec![left, right])])
            }
        }
        Expr::Exp(arg) => Expr::mul(vec![e.clone(), d(arg, var)]),
        Expr::Ln(arg) => Expr::mul(vec![
            d(arg, var),
            Expr::pow((**arg).clone(), Expr::int(-1)),
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::collections::BTreeMap;

    fn deriv(src: &str, n: usize) -> Expr {
        nth_derivative(&parse(src).unwrap(), "x", n, &CalcConfig::default()).unwrap()
    }

    #[test]
    fn product_rule_on_x_ln_x() {
        assert_eq!(deriv("x*ln(x)", 1), parse("ln(x) + 1").unwrap());
        assert_eq!(deriv("x*ln(x)", 2), parse("1/x").unwrap());
    }

    #[test]
    fn constants_vanish_and_order_zero_is_identity() {
        assert_eq!(deriv("5", 1), Expr::int(0));
        let e = parse("x^2 + 2*x").unwrap();
        assert_eq!(
            nth_derivative(&e, "x", 0, &CalcConfig::default()).unwrap(),
            e
        );
    }

    #[test]
    fn exp_chain_rule() {
        assert_eq!(deriv("exp(x)", 1), parse("exp(x)").unwrap());
        assert_eq!(deriv("exp(x^2)", 1), parse("2*x*exp(x^2)").unwrap());
    }

    #[test]
    fn two_pow_x_derivative_picks_up_ln2() {
        assert_eq!(deriv("2^x", 1), parse("ln(2) * 2^x").unwrap());
        assert_eq!(deriv("2^x", 3), parse("ln(2)^3 * 2^x").unwrap());
    }

    #[test]
    fn general_power_routes_through_exp_ln() {
        // d/dx x^x = x^x (ln x + 1)
        assert_eq!(deriv("x^x", 1), parse("x^x * (ln(x) + 1)").unwrap());
    }

    #[test]
    fn free_exponent_uses_the_power_rule() {
        assert_eq!(deriv("x^(1/2)", 1), parse("1/2 * x^(-1/2)").unwrap());
        let dy = differentiate(&parse("x^y").unwrap(), "x");
        assert_eq!(dy, parse("y * x^(y - 1)").unwrap());
    }

    #[test]
    fn two_pow_sqrt_x_derivative_value_checks() {
        // d/dx 2^sqrt(x) = 2^(sqrt(x) - 1) ln(2) / sqrt(x)
        let got = deriv("2^sqrt(x)", 1);
        let want = parse("2^(sqrt(x) - 1) * ln(2) / sqrt(x)").unwrap();
        for x in [1.0, 4.0, 9.0] {
            let env = BTreeMap::from([("x".to_string(), x)]);
            let g = evaluate(&got, &env, 128).unwrap();
            let w = evaluate(&want, &env, 128).unwrap();
            assert!((g - w).abs() <= 1e-12 * w.abs(), "x={x}: {g} vs {w}");
        }
    }

    #[test]
    fn order_cap_is_enforced() {
        let e = parse("exp(x)").unwrap();
        let err = nth_derivative(&e, "x", 11, &CalcConfig::default()).unwrap_err();
        assert!(matches!(err, Error::OrderTooLarge { requested: 11, max: 10 }));
    }

    #[test]
    fn node_cap_is_enforced() {
        let mut cfg = CalcConfig::default();
        cfg.node_cap = 10;
        let e = parse("x^log2(x)").unwrap();
        let err = nth_derivative(&e, "x", 3, &cfg).unwrap_err();
        assert!(matches!(err, Error::ExpressionTooLarge { .. }));
    }
}
