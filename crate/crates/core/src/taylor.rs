//! Taylor machinery: coefficients by repeated symbolic differentiation,
//! truncated-polynomial evaluation, Lagrange remainder bounds, and
//! radius-of-convergence estimates read off the coefficient sequence.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::calculus::{differentiate, eval_exact, evaluate};
use crate::config::CalcConfig;
use crate::error::{Error, Result};
use crate::expr::{canonicalize, Expr};

/// A single coefficient a_k = f^(k)(x0)/k!. `exact` is set when the k-th
/// derivative evaluates to a rational at the center; `value` is then its
/// nearest f64, otherwise a floating evaluation at working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Coefficient {
    fn is_zero(&self) -> bool {
        match &self.exact {
            Some(q) => q.is_zero(),
            None => self.value == 0.0,
        }
    }

    fn magnitude(&self) -> f64 {
        match &self.exact {
            Some(q) => q.abs().to_f64().unwrap_or(f64::INFINITY),
            None => self.value.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub center: f64,
    pub order: usize,
    /// Always `order + 1` entries, a_0 first.
    pub coefficients: Vec<Coefficient>,
    pub variable: String,
    pub source: Expr,
}

/// Expands `f` around `center` up to `order`. Derivatives are taken
/// symbolically one order at a time, so the same node cap that protects
/// `nth_derivative` applies to every intermediate here.
pub fn taylor_series(
    f: &Expr,
    var: &str,
    center: f64,
    order: usize,
    cfg: &CalcConfig,
) -> Result<TaylorSeries> {
    if order > cfg.n_max {
        return Err(Error::OrderTooLarge {
            requested: order,
            max: cfg.n_max,
        });
    }
    if !center.is_finite() {
        return Err(Error::InvalidConfig {
            message: format!("series center must be finite, got {center}"),
        });
    }
    // f64 centers are exact rationals, so the exact path sees no rounding.
    let center_rat = BigRational::from_float(center).unwrap();
    let exact_env = BTreeMap::from([(var.to_string(), center_rat)]);
    let float_env = BTreeMap::from([(var.to_string(), center)]);

    let source = canonicalize(f);
    let mut deriv = source.clone();
    let mut fact = BigRational::one();
    let mut fact_f64 = 1.0f64;
    let mut coefficients = Vec::with_capacity(order + 1);
    for k in 0..=order {
        if k > 0 {
            deriv = differentiate(&deriv, var);
            let nodes = deriv.node_count();
            if nodes > cfg.node_cap {
                return Err(Error::ExpressionTooLarge {
                    nodes,
                    cap: cfg.node_cap,
                });
            }
            fact *= BigRational::from_integer(BigInt::from(k));
            fact_f64 *= k as f64;
        }
        let exact = eval_exact(&deriv, &exact_env).map(|v| v / fact.clone());
        let value = match &exact {
            Some(q) => q.to_f64().unwrap_or(f64::INFINITY),
            None => evaluate(&deriv, &float_env, cfg.precision_bits)? / fact_f64,
        };
        coefficients.push(Coefficient { value, exact });
    }
    Ok(TaylorSeries {
        center,
        order,
        coefficients,
        variable: var.to_string(),
        source,
    })
}

/// Horner evaluation of the truncated polynomial at `x`.
pub fn eval_truncated(s: &TaylorSeries, x: f64) -> f64 {
    let d = x - s.center;
    let mut acc = 0.0;
    for c in s.coefficients.iter().rev() {
        acc = acc * d + c.value;
    }
    acc
}

/// M * |x - x0|^(n+1) / (n+1)!, the worst-case remainder of an order-n
/// truncation when |f^(n+1)| <= M between x0 and x.
pub fn lagrange_bound(m: f64, n: usize, x: f64, x0: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::NegativeM { value: m });
    }
    let mut fact = 1.0f64;
    for k in 2..=(n as u64 + 1) {
        fact *= k as f64;
    }
    Ok(m * (x - x0).abs().powi(n as i32 + 1) / fact)
}

/// |f(x) - T_n(x)|, the observed truncation error.
pub fn empirical_remainder(
    f: &Expr,
    s: &TaylorSeries,
    x: f64,
    precision_bits: usize,
) -> Result<f64> {
    let env = BTreeMap::from([(s.variable.clone(), x)]);
    let fx = evaluate(f, &env, precision_bits)?;
    Ok((fx - eval_truncated(s, x)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMethod {
    Ratio,
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusVerdict {
    Infinite,
    Finite(f64),
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusEstimate {
    pub method: RadiusMethod,
    /// Per-index estimates r_k, in index order, zero-coefficient indices
    /// left out.
    pub sequence: Vec<f64>,
    pub verdict: RadiusVerdict,
    /// Indices dropped because the coefficient the estimate divides by (or
    /// takes a root of) is zero.
    pub skipped_indices: Vec<usize>,
}

/// Thresholds that turn a finite estimate sequence into a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusConfig {
    /// Relative spread over the inspection window that counts as stabilized.
    pub stabilize_rel: f64,
    /// Value past which a monotone-increasing tail is divergent outright.
    /// A tail that grows strictly across the whole observed second half is
    /// divergent even below this, since no finite prefix of such a sequence
    /// can witness a ceiling.
    pub diverge_threshold: f64,
    /// How many trailing entries must be strictly increasing.
    pub monotone_window: usize,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig {
            stabilize_rel: 1e-3,
            diverge_threshold: 1e6,
            monotone_window: 10,
        }
    }
}

// Below this many usable entries no verdict is attempted.
const MIN_USABLE: usize = 4;

/// Ratio test: r_k = |a_k / a_{k+1}|. Exact coefficients divide exactly, so
/// series with rational coefficients produce noise-free sequences.
pub fn radius_ratio(s: &TaylorSeries, cfg: &RadiusConfig) -> RadiusEstimate {
    let coeffs = &s.coefficients;
    let candidates = coeffs.len().saturating_sub(1);
    let mut sequence = Vec::new();
    let mut skipped = Vec::new();
    for k in 0..candidates {
        let (num, den) = (&coeffs[k], &coeffs[k + 1]);
        if den.is_zero() {
            skipped.push(k);
            continue;
        }
        let r = match (&num.exact, &den.exact) {
            (Some(p), Some(q)) => (p / q).abs().to_f64().unwrap_or(f64::INFINITY),
            _ => (num.value / den.value).abs(),
        };
        sequence.push(r);
    }
    let verdict = if tail_mostly_skipped(candidates, &skipped, 0) {
        RadiusVerdict::Inconclusive
    } else {
        classify_sequence(&sequence, cfg)
    };
    RadiusEstimate {
        method: RadiusMethod::Ratio,
        sequence,
        verdict,
        skipped_indices: skipped,
    }
}

/// Root test: r_k = |a_k|^(-1/k) for k >= 1. The verdict inspects suffix
/// minima of the tail half, a finite surrogate for lim inf, so an
/// oscillating sequence settles on its lower envelope.
pub fn radius_root(s: &TaylorSeries, cfg: &RadiusConfig) -> RadiusEstimate {
    let coeffs = &s.coefficients;
    let candidates = coeffs.len().saturating_sub(1);
    let mut sequence = Vec::new();
    let mut skipped = Vec::new();
    for k in 1..coeffs.len() {
        let c = &coeffs[k];
        if c.is_zero() {
            skipped.push(k);
            continue;
        }
        sequence.push(c.magnitude().powf(-1.0 / k as f64));
    }
    let verdict = if tail_mostly_skipped(candidates, &skipped, 1) {
        RadiusVerdict::Inconclusive
    } else {
        let tail = &sequence[sequence.len() / 2..];
        let mut liminf = vec![f64::INFINITY; tail.len()];
        let mut running = f64::INFINITY;
        for (i, &v) in tail.iter().enumerate().rev() {
            running = running.min(v);
            liminf[i] = running;
        }
        // The final slot is a bare, unsmoothed r_k; drop it so one stray
        // peak at the end cannot mask a settled lower envelope.
        if !liminf.is_empty() {
            liminf.pop();
        }
        classify_sequence(&liminf, cfg)
    };
    RadiusEstimate {
        method: RadiusMethod::Root,
        sequence,
        verdict,
        skipped_indices: skipped,
    }
}

// True when more than half of the tail-half candidate indices were skipped;
// the estimate then rests on too sparse a suffix to call.
fn tail_mostly_skipped(candidates: usize, skipped: &[usize], first_index: usize) -> bool {
    if candidates == 0 {
        return true;
    }
    let tail_start = first_index + candidates / 2;
    let tail_slots = first_index + candidates - tail_start;
    let skipped_in_tail = skipped.iter().filter(|&&k| k >= tail_start).count();
    2 * skipped_in_tail > tail_slots
}

fn classify_sequence(seq: &[f64], cfg: &RadiusConfig) -> RadiusVerdict {
    if seq.len() < MIN_USABLE {
        return RadiusVerdict::Inconclusive;
    }
    let last = *seq.last().unwrap();
    let window = &seq[seq.len() - seq.len().min(10)..];
    if window.iter().all(|v| v.is_finite()) {
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= cfg.stabilize_rel * last.abs().max(1.0) {
            return RadiusVerdict::Finite(last);
        }
    }
    let strictly_increasing =
        |s: &[f64]| s.windows(2).all(|p| p[0].is_finite() && p[1] > p[0]);
    let mono = &seq[seq.len() - cfg.monotone_window.min(seq.len())..];
    if strictly_increasing(mono)
        && (last >= cfg.diverge_threshold || strictly_increasing(&seq[seq.len() / 2..]))
    {
        return RadiusVerdict::Infinite;
    }
    RadiusVerdict::Inconclusive
}

/// Ratio t_n / t_{n+1} of consecutive terms of the expansion
/// x·ln x = Σ_{n>=1} x·((x-1)/x)^n / n, which converges for x > 1/2.
/// The ratio is (n+1)·x / (n·(x-1)) and tends to x/(x-1).
pub fn xlogx_term_ratio(x: f64, n: u64) -> Result<f64> {
    if !(x > 0.5) {
        return Err(Error::domain(format!(
            "term ratio is defined for x > 1/2, got {x}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig {
            message: "term index must be >= 1".into(),
        });
    }
    let nf = n as f64;
    Ok(((nf + 1.0) * x) / (nf * (x - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::nth_derivative;
    use crate::expr::parse;

    fn series(src: &str, center: f64, order: usize) -> TaylorSeries {
        let f = parse(src).unwrap();
        let cfg = CalcConfig::with_order(order.max(10));
        taylor_series(&f, "x", center, order, &cfg).unwrap()
    }

    #[test]
    fn exp_coefficients_are_exact_reciprocal_factorials() {
        let s = series("exp(x)", 0.0, 6);
        assert_eq!(s.coefficients.len(), 7);
        let mut fact = BigRational::one();
        for (k, c) in s.coefficients.iter().enumerate() {
            if k > 0 {
                fact *= BigRational::from_integer(BigInt::from(k));
            }
            let expected = BigRational::one() / fact.clone();
            assert_eq!(c.exact.as_ref(), Some(&expected), "a_{k}");
            assert!((c.value - expected.to_f64().unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn two_pow_x_coefficients_match_the_closed_form() {
        let s = series("2^x", 0.0, 3);
        let ln2 = std::f64::consts::LN_2;
        let expected = [1.0, ln2, ln2 * ln2 / 2.0, ln2 * ln2 * ln2 / 6.0];
        for (c, e) in s.coefficients.iter().zip(expected) {
            assert!((c.value - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn constant_series_is_flat() {
        let s = series("7", 3.0, 2);
        let values: Vec<f64> = s.coefficients.iter().map(|c| c.value).collect();
        assert_eq!(values, vec![7.0, 0.0, 0.0]);
        assert!(s.coefficients[1].exact.as_ref().unwrap().is_zero());
    }

    #[test]
    fn truncated_exp_at_one_is_sixty_five_twenty_fourths() {
        let s = series("exp(x)", 0.0, 4);
        assert!((eval_truncated(&s, 1.0) - 65.0 / 24.0).abs() < 1e-12);
        let s1 = series("exp(x)", 0.0, 1);
        assert_eq!(eval_truncated(&s1, 0.0), 1.0);
    }

    #[test]
    fn remainder_vanishes_at_the_center_and_on_polynomials() {
        let f = parse("x * ln(x)").unwrap();
        let s = series("x * ln(x)", 1.0, 4);
        assert!(empirical_remainder(&f, &s, 1.0, 128).unwrap() < 1e-15);

        let p = parse("x^2 + 3*x + 2").unwrap();
        let sp = series("x^2 + 3*x + 2", 0.0, 2);
        for x in [0.3, 1.7, 10.0, -4.0] {
            let r = empirical_remainder(&p, &sp, x, 128).unwrap();
            assert!(r <= 1e-12, "polynomial remainder at {x} was {r}");
        }
    }

    #[test]
    fn lagrange_bound_matches_direct_arithmetic() {
        assert_eq!(lagrange_bound(0.0, 5, 0.7, 0.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        // e * 0.5^4 / 4! for the order-3 truncation of exp on [0, 0.5].
        let b = lagrange_bound(e, 3, 0.5, 0.0).unwrap();
        assert!((b - e * 0.0625 / 24.0).abs() < 1e-15);
        assert!((b - 0.007078888).abs() < 1e-6);
        assert!(matches!(
            lagrange_bound(-1.0, 3, 0.5, 0.0),
            Err(Error::NegativeM { .. })
        ));
        assert!(matches!(
            lagrange_bound(f64::NAN, 3, 0.5, 0.0),
            Err(Error::NegativeM { .. })
        ));
    }

    #[test]
    fn lagrange_bound_dominates_observed_remainders_of_exp() {
        let f = parse("exp(x)").unwrap();
        let cfg = CalcConfig::default();
        for n in 3..=5 {
            let s = series("exp(x)", 0.0, n);
            // sup of |f^(n+1)| on [0, 1] by grid max; exp is increasing so
            // this lands on e at the right edge.
            let d = nth_derivative(&f, "x", n + 1, &cfg).unwrap();
            let mut m = 0.0f64;
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let env = BTreeMap::from([("x".to_string(), x)]);
                m = m.max(evaluate(&d, &env, 128).unwrap().abs());
            }
            for i in 1..=10 {
                let x = i as f64 / 10.0;
                let r = empirical_remainder(&f, &s, x, 128).unwrap();
                let bound = lagrange_bound(m, n, x, 0.0).unwrap();
                assert!(r <= bound, "n={n} x={x}: {r} > {bound}");
            }
        }
    }

    #[test]
    fn even_functions_have_vanishing_odd_coefficients() {
        let s = series("exp(x^2)", 0.0, 6);
        for k in [1, 3, 5] {
            assert_eq!(s.coefficients[k].value, 0.0, "a_{k}");
        }
        // And the even ones follow 1/m! for x^(2m).
        assert_eq!(s.coefficients[2].value, 1.0);
        assert_eq!(s.coefficients[4].value, 0.5);
    }

    #[test]
    fn exp_ratio_sequence_is_exactly_k_plus_one() {
        let s = series("exp(x)", 0.0, 20);
        let est = radius_ratio(&s, &RadiusConfig::default());
        assert_eq!(est.method, RadiusMethod::Ratio);
        assert_eq!(est.sequence.len(), 20);
        for (k, r) in est.sequence.iter().enumerate() {
            assert_eq!(*r, (k + 1) as f64, "r_{k}");
        }
        assert_eq!(est.verdict, RadiusVerdict::Infinite);
        assert!(est.skipped_indices.is_empty());
    }

    #[test]
    fn geometric_series_has_radius_one_by_both_tests() {
        let s = series("(1 - x)^(-1)", 0.0, 20);
        for c in &s.coefficients {
            assert_eq!(c.exact.as_ref().unwrap(), &BigRational::one());
        }
        let cfg = RadiusConfig::default();
        match radius_ratio(&s, &cfg).verdict {
            RadiusVerdict::Finite(r) => assert!((r - 1.0).abs() < 1e-9),
            v => panic!("ratio verdict {v:?}"),
        }
        match radius_root(&s, &cfg).verdict {
            RadiusVerdict::Finite(r) => assert!((r - 1.0).abs() < 1e-2),
            v => panic!("root verdict {v:?}"),
        }
    }

    #[test]
    fn two_pow_x_diverges_by_ratio_and_root_alike() {
        let s = series("2^x", 0.0, 50);
        let cfg = RadiusConfig::default();
        assert_eq!(radius_ratio(&s, &cfg).verdict, RadiusVerdict::Infinite);
        assert_eq!(radius_root(&s, &cfg).verdict, RadiusVerdict::Infinite);
    }

    #[test]
    fn constant_series_is_inconclusive_with_all_indices_skipped() {
        let s = series("7", 0.0, 6);
        let cfg = RadiusConfig::default();
        let ratio = radius_ratio(&s, &cfg);
        assert_eq!(ratio.verdict, RadiusVerdict::Inconclusive);
        assert_eq!(ratio.skipped_indices, vec![0, 1, 2, 3, 4, 5]);
        assert!(ratio.sequence.is_empty());
        let root = radius_root(&s, &cfg);
        assert_eq!(root.verdict, RadiusVerdict::Inconclusive);
        assert_eq!(root.skipped_indices, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn root_liminf_settles_on_the_lower_envelope() {
        // Oscillating estimates: the raw tail never stabilizes, but the
        // suffix-minima surrogate does, on the smaller value.
        let seq: Vec<f64> = (0..30)
            .map(|k| if k % 2 == 0 { 1.0 } else { 2.0 })
            .collect();
        let tail = &seq[seq.len() / 2..];
        let mut liminf = vec![f64::INFINITY; tail.len()];
        let mut running = f64::INFINITY;
        for (i, &v) in tail.iter().enumerate().rev() {
            running = running.min(v);
            liminf[i] = running;
        }
        liminf.pop();
        assert_eq!(
            classify_sequence(&liminf, &RadiusConfig::default()),
            RadiusVerdict::Finite(1.0)
        );
    }

    #[test]
    fn term_ratio_of_the_xlogx_expansion_tends_to_x_over_x_minus_one() {
        assert_eq!(xlogx_term_ratio(2.0, 1).unwrap(), 4.0);
        let r = xlogx_term_ratio(2.0, 10_000).unwrap();
        assert!((r - 2.0).abs() < 1e-3);
        for x in [2.0, 3.0, 4.0, 5.0, 6.0] {
            let r = xlogx_term_ratio(x, 1_000_000).unwrap();
            assert!(r > 1.0);
            assert!((r - x / (x - 1.0)).abs() < 1e-4);
        }
        assert!(matches!(
            xlogx_term_ratio(0.4, 5),
            Err(Error::DomainError { .. })
        ));
        assert!(matches!(
            xlogx_term_ratio(2.0, 0),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn order_and_domain_failures_surface_as_errors() {
        let f = parse("exp(x)").unwrap();
        let cfg = CalcConfig::default();
        assert!(matches!(
            taylor_series(&f, "x", 0.0, 11, &cfg),
            Err(Error::OrderTooLarge { .. })
        ));
        let g = parse("ln(x)").unwrap();
        assert!(matches!(
            taylor_series(&g, "x", 0.0, 2, &cfg),
            Err(Error::DomainError { .. })
        ));
        assert!(matches!(
            taylor_series(&f, "x", f64::NAN, 2, &cfg),
            Err(Error::InvalidConfig { .. })
        ));
    }
}
