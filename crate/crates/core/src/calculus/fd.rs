//! Central finite differences, the numeric oracle the symbolic derivatives
//! are checked against.

use std::collections::BTreeMap;

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::config::{clamp_precision, MAX_PRECISION_BITS};
use crate::error::{Error, Result};
use crate::expr::Expr;

use super::eval::{bf_to_f64, eval_bf};

const RM: RoundingMode = RoundingMode::None;

/// Central-difference estimate of the n-th derivative of `e` at `x` with
/// step `h`, for n in 1..=4. Runs at a working precision of at least 256
/// bits; when the stencil combination cancels down to the rounding noise
/// floor the precision is doubled (up to the supported maximum) and the
/// estimate recomputed.
pub fn finite_difference(
    e: &Expr,
    var: &str,
    n: usize,
    x: f64,
    h: f64,
    precision_bits: usize,
) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidConfig {
            message: format!("finite differences cover orders 1 through 4, got {n}"),
        });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidConfig {
            message: format!("step must be positive and finite, got {h}"),
        });
    }

    let mut p = clamp_precision(precision_bits).max(256);
    loop {
        let (value, cancelled) = stencil(e, var, n, x, h, p)?;
        if !cancelled || p >= MAX_PRECISION_BITS {
            return Ok(value);
        }
        p = (p * 2).min(MAX_PRECISION_BITS);
    }
}

/// Stencil weights at offsets k*h. Classic central coefficients:
/// n=1: [f(x+h) - f(x-h)] / 2h
/// n=2: [f(x+h) - 2 f(x) + f(x-h)] / h^2
/// n=3: [f(x+2h) - 2 f(x+h) + 2 f(x-h) - f(x-2h)] / 2h^3
/// n=4: [f(x+2h) - 4 f(x+h) + 6 f(x) - 4 f(x-h) + f(x-2h)] / h^4
fn weights(n: usize) -> (&'static [(i32, f64)], f64, u32) {
    match n {
        1 => (&[(1, 1.0), (-1, -1.0)], 2.0, 1),
        2 => (&[(1, 1.0), (0, -2.0), (-1, 1.0)], 1.0, 2),
        3 => (
            &[(2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)],
            2.0,
            3,
        ),
        4 => (
            &[(2, 1.0), (1, -4.0), (0, 6.0), (-1, -4.0), (-2, 1.0)],
            1.0,
            4,
        ),
        _ => unreachable!("order checked by caller"),
    }
}

fn stencil(
    e: &Expr,
    var: &str,
    n: usize,
    x: f64,
    h: f64,
    p: usize,
) -> Result<(f64, bool)> {
    let (taps, denom_scale, h_pow) = weights(n);
    let mut cc = Consts::new().expect("constants cache allocation");

    let hb = BigFloat::from_f64(h, p);
    let xb = BigFloat::from_f64(x, p);

    let mut acc = BigFloat::from_f64(0.0, p);
    let mut scale = BigFloat::from_f64(0.0, p);
    let mut env = BTreeMap::new();
    for (k, w) in taps {
        // Probe points stay in working precision; rounding them through f64
        // would swamp the stencil with quantization error at small h.
        let point = xb.add(&hb.mul(&BigFloat::from_f64(*k as f64, p), p, RM), p, RM);
        env.insert(var.to_string(), point);
        let f = eval_bf(e, &env, p, &mut cc)?;
        let term = f.mul(&BigFloat::from_f64(*w, p), p, RM);
        if scale.abs_cmp(&term).is_some_and(|c| c < 0) {
            scale = bf_abs(&term);
        }
        acc = acc.add(&term, p, RM);
    }

    // Cancellation check: if the combination is smaller than the terms by
    // nearly the full precision, what is left is rounding noise.
    let floor = scale.mul(&pow2(-((p as i64) - 8), p), p, RM);
    let cancelled = (!acc.is_zero() && bf_abs(&acc).cmp(&floor).is_some_and(|c| c < 0))
        || (acc.is_zero() && !scale.is_zero());

    let mut denom = hb.powi(h_pow as usize, p, RM);
    if denom_scale != 1.0 {
        denom = denom.mul(&BigFloat::from_f64(denom_scale, p), p, RM);
    }
    let value = bf_to_f64(&acc.div(&denom, p, RM));
    Ok((value, cancelled))
}

fn pow2(e: i64, p: usize) -> BigFloat {
    let mut b = BigFloat::from_f64(1.0, p);
    b.set_exponent(b.exponent().expect("finite") + e as astro_float::Exponent);
    b
}

fn bf_abs(x: &BigFloat) -> BigFloat {
    if x.is_negative() {
        x.neg()
    } else {
        x.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn fd(src: &str, n: usize, x: f64, h: f64) -> f64 {
        finite_difference(&parse(src).unwrap(), "x", n, x, h, 256).unwrap()
    }

    #[test]
    fn first_derivative_of_square() {
        assert!((fd("x^2", 1, 3.0, 1e-4) - 6.0).abs() < 1e-6);
    }

    #[test]
    fn second_derivative_of_two_pow_x() {
        let want = 2.0 * 2f64.ln().powi(2);
        let got = fd("2^x", 2, 1.0, 1e-4);
        assert!((got - want).abs() / want < 1e-5, "{got} vs {want}");
    }

    #[test]
    fn second_derivative_of_x_ln_x() {
        assert!((fd("x*ln(x)", 2, 10.0, 1e-4) - 0.1).abs() < 1e-6);
    }

    #[test]
    fn third_and_fourth_orders_match_closed_forms() {
        // (x^5)''' = 60 x^2, (x^5)'''' = 120 x
        assert!((fd("x^5", 3, 2.0, 1e-3) - 240.0).abs() / 240.0 < 1e-5);
        assert!((fd("x^5", 4, 2.0, 1e-2) - 240.0).abs() / 240.0 < 1e-5);
        // exp keeps its own derivatives
        let e2 = 2f64.exp();
        assert!((fd("exp(x)", 3, 2.0, 1e-3) - e2).abs() / e2 < 1e-6);
    }

    #[test]
    fn cancellation_bumps_precision_instead_of_returning_noise() {
        // At tiny h the order-4 stencil on a cubic cancels to ~0; the
        // combination is pure rounding noise unless precision escalates.
        let got = fd("x^3", 4, 1.0, 1e-5);
        assert!(got.abs() < 1e-6, "fourth derivative of x^3 is 0, got {got}");
    }

    #[test]
    fn out_of_range_orders_are_rejected() {
        assert!(finite_difference(&parse("x").unwrap(), "x", 5, 1.0, 1e-4, 256).is_err());
        assert!(finite_difference(&parse("x").unwrap(), "x", 0, 1.0, 1e-4, 256).is_err());
        assert!(finite_difference(&parse("x").unwrap(), "x", 1, 1.0, 0.0, 256).is_err());
    }

    #[test]
    fn domain_errors_propagate() {
        // ln is evaluated at x - h < 0
        let err = finite_difference(&parse("ln(x)").unwrap(), "x", 1, 0.00005, 1e-4, 256);
        assert!(matches!(err, Err(Error::DomainError { .. })));
    }
}
