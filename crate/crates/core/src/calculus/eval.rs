//! Evaluation backends: arbitrary-precision floating point with explicit
//! domain guards, and an exact rational fast path for the places where a
//! value is a rational by construction.

use std::collections::BTreeMap;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, INF_POS, NAN};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::config::clamp_precision;
use crate::error::{Error, Result};
use crate::expr::Expr;

// Correct-rounding modes drive the library into an unbounded precision-raise
// loop when a pow/ln result is exactly representable (e.g. integer powers of
// short binary fractions). Unrounded results are off by at most an ulp or
// two at working precision, which the headroom over f64 absorbs.
const RM: RoundingMode = RoundingMode::None;

/// Exp arguments beyond this saturate straight to +Inf / 0 instead of being
/// handed to the library. Keeps deeply nested exponentials from burning time
/// on results that cannot round-trip to f64 anyway.
const EXP_ARG_SATURATE: f64 = 1e9;

/// Evaluates `e` with all free variables bound, at `precision_bits` working
/// precision (clamped to the supported range), rounding the result to f64.
/// Overflow saturates to +/-Inf rather than erroring; ln of a non-positive
/// value and negative-base non-integer powers are domain errors.
pub fn evaluate(e: &Expr, env: &BTreeMap<String, f64>, precision_bits: usize) -> Result<f64> {
    let p = clamp_precision(precision_bits);
    let mut cc = Consts::new().expect("constants cache allocation");
    let benv: BTreeMap<String, BigFloat> = env
        .iter()
        .map(|(k, v)| (k.clone(), BigFloat::from_f64(*v, p)))
        .collect();
    let v = eval_bf(e, &benv, p, &mut cc)?;
    Ok(bf_to_f64(&v))
}

/// Inner evaluator over BigFloat bindings, so callers that construct probe
/// points in high precision (finite differences) do not lose them to an f64
/// round trip.
pub(crate) fn eval_bf(
    e: &Expr,
    env: &BTreeMap<String, BigFloat>,
    p: usize,
    cc: &mut Consts,
) -> Result<BigFloat> {
    Ok(match e {
        Expr::Const(c) => rational_to_bf(c, p, cc),
        Expr::Var(name) => match env.get(name) {
            Some(v) => v.clone(),
            None => {
                return Err(Error::UnboundVariable {
                    name: name.clone(),
                })
            }
        },
        Expr::Add(terms) => {
            let mut acc = BigFloat::from_f64(0.0, p);
            for t in terms {
                acc = acc.add(&eval_bf(t, env, p, cc)?, p, RM);
            }
            acc
        }
        Expr::Mul(factors) => {
            let mut acc = BigFloat::from_f64(1.0, p);
            for f in factors {
                acc = acc.mul(&eval_bf(f, env, p, cc)?, p, RM);
            }
            acc
        }
        Expr::Pow(base, exponent) => {
            let b = eval_bf(base, env, p, cc)?;
            let w = eval_bf(exponent, env, p, cc)?;
            pow_bf(&b, &w, p, cc)?
        }
        Expr::Exp(arg) => exp_bf(&eval_bf(arg, env, p, cc)?, p, cc),
        Expr::Ln(arg) => {
            let a = eval_bf(arg, env, p, cc)?;
            if a.is_nan() {
                return Ok(NAN);
            }
            if a.is_inf_pos() {
                return Ok(INF_POS);
            }
            if a.is_zero() || a.is_negative() {
                return Err(Error::domain(format!(
                    "ln of non-positive value {}",
                    bf_to_f64(&a)
                )));
            }
            a.ln(p, RM, cc)
        }
    })
}

fn exp_bf(arg: &BigFloat, p: usize, cc: &mut Consts) -> BigFloat {
    if arg.is_nan() {
        return NAN;
    }
    let a = bf_to_f64(arg);
    if a > EXP_ARG_SATURATE {
        return INF_POS;
    }
    if a < -EXP_ARG_SATURATE {
        return BigFloat::from_f64(0.0, p);
    }
    // In-range overflow (exponent field saturation) comes back as +Inf from
    // the library itself.
    arg.exp(p, RM, cc)
}

fn pow_bf(b: &BigFloat, w: &BigFloat, p: usize, cc: &mut Consts) -> Result<BigFloat> {
    if b.is_nan() || w.is_nan() {
        return Ok(NAN);
    }
    if w.is_zero() {
        return Ok(BigFloat::from_f64(1.0, p));
    }
    if b.is_zero() {
        if w.is_negative() {
            return Ok(INF_POS);
        }
        return Ok(BigFloat::from_f64(0.0, p));
    }
    if b.is_negative() {
        if !w.is_int() {
            return Err(Error::domain(format!(
                "negative base {} raised to non-integer exponent {}",
                bf_to_f64(b),
                bf_to_f64(w)
            )));
        }
        let mag = pow_bf(&b.neg(), w, p, cc)?;
        let two = BigFloat::from_f64(2.0, p);
        let odd = !w.rem(&two).is_zero();
        return Ok(if odd { mag.neg() } else { mag });
    }
    // Small integer exponents take the square-and-multiply route; the
    // general pow runs exp(w ln b), an order of magnitude slower, and
    // derivative trees are dense with x^(-k) factors.
    if w.is_int() {
        let wf = bf_to_f64(w);
        if wf.abs() <= POWI_FAST_CAP {
            let mag = b.powi(wf.abs() as usize, p, RM);
            return Ok(if wf < 0.0 { mag.reciprocal(p, RM) } else { mag });
        }
    }
    Ok(b.pow(w, p, RM, cc))
}

// Integer exponents at or below this go through powi instead of pow.
const POWI_FAST_CAP: f64 = 1048576.0;

pub(crate) fn rational_to_bf(c: &BigRational, p: usize, cc: &mut Consts) -> BigFloat {
    let n = bigint_to_bf(c.numer(), p, cc);
    if c.is_integer() {
        return n;
    }
    let d = bigint_to_bf(c.denom(), p, cc);
    n.div(&d, p, RM)
}

fn bigint_to_bf(i: &BigInt, p: usize, cc: &mut Consts) -> BigFloat {
    // Fast path covers every integer that fits f64 exactly.
    if let Some(v) = i.to_i64() {
        if v.abs() <= (1i64 << 53) {
            return BigFloat::from_f64(v as f64, p);
        }
    }
    BigFloat::parse(&i.to_string(), Radix::Dec, p, RM, cc)
}

/// Rounds to the nearest f64, saturating to +/-Inf outside its range. The
/// library's own conversion is not public, so the mantissa words are folded
/// by hand; exponents are applied in chunks because `powi` alone would
/// overflow past 2^1023.
pub(crate) fn bf_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let (words, _n, sign, exp, _inexact) = x.as_raw_parts().expect("finite number has raw parts");
    // Value is 0.mantissa * 2^exp with the mantissa's top bit in the last word.
    let mut mag = 0.0f64;
    let mut scale = exp as i64 - 64 * words.len() as i64;
    for w in words.iter() {
        mag += ldexp(*w as f64, scale);
        scale += 64;
    }
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

fn ldexp(x: f64, e: i64) -> f64 {
    if x == 0.0 || e == 0 {
        return x;
    }
    if e > 1100 {
        return x * f64::INFINITY;
    }
    if e < -1200 {
        return 0.0;
    }
    let mut r = x;
    let mut e = e as i32;
    while e > 1000 {
        r *= (2.0f64).powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        r *= (2.0f64).powi(-1000);
        e += 1000;
    }
    r * (2.0f64).powi(e)
}

/// Exact evaluation over the rationals. Returns None whenever the value is
/// not forced to be rational: Pow needs an integer exponent of manageable
/// size, Exp evaluates only at 0 and Ln only at 1.
pub fn eval_exact(e: &Expr, env: &BTreeMap<String, BigRational>) -> Option<BigRational> {
    const EXACT_POW_CAP: i64 = 1 << 16;
    match e {
        Expr::Const(c) => Some(c.clone()),
        Expr::Var(name) => env.get(name).cloned(),
        Expr::Add(terms) => {
            let mut acc = BigRational::zero();
            for t in terms {
                acc += eval_exact(t, env)?;
            }
            Some(acc)
        }
        Expr::Mul(factors) => {
            let mut acc = BigRational::one();
            for f in factors {
                acc *= eval_exact(f, env)?;
            }
            Some(acc)
        }
        Expr::Pow(base, exponent) => {
            let w = eval_exact(exponent, env)?;
            if !w.is_integer() {
                return None;
            }
            let k = w.to_integer().to_i64()?;
            if k.abs() > EXACT_POW_CAP {
                return None;
            }
            let b = eval_exact(base, env)?;
            if b.is_zero() {
                return if k < 0 { None } else if k == 0 { Some(BigRational::one()) } else { Some(b) };
            }
            let mag = BigRational::new(
                b.numer().pow(k.unsigned_abs() as u32),
                b.denom().pow(k.unsigned_abs() as u32),
            );
            Some(if k < 0 { mag.recip() } else { mag })
        }
        Expr::Exp(arg) => {
            let a = eval_exact(arg, env)?;
            if a.is_zero() {
                Some(BigRational::one())
            } else {
                None
            }
        }
        Expr::Ln(arg) => {
            let a = eval_exact(arg, env)?;
            if a.is_one() {
                Some(BigRational::zero())
            } else {
                None
            }
        }
    }
}
