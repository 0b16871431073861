//! Limit probing along a geometric grid running off toward +infinity.

use std::collections::BTreeMap;

use astro_float::{BigFloat, Consts};

use crate::config::ProbeConfig;
use crate::error::{Error, Result};
use crate::expr::Expr;

use super::eval::{bf_to_f64, eval_bf};

#[derive(Debug, Clone, PartialEq)]
pub enum LimitKind {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
    Inconclusive,
}

/// Verdict plus the evidence it was reached on: every (x, f(x)) probe pair,
/// in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitVerdict {
    pub kind: LimitKind,
    pub trace: Vec<(f64, f64)>,
}

/// Probes `e` at x_k = start * factor^k and classifies the tail: Finite when
/// the last five values agree within the stabilization tolerance (relative,
/// with an absolute floor of 1 so decay to zero stabilizes too), infinite
/// when the tail overflows, crosses the divergence threshold, or grows
/// monotonically in magnitude, Inconclusive otherwise. A Finite value within
/// tolerance of zero snaps to exactly 0.
pub fn limit_probe(e: &Expr, var: &str, cfg: &ProbeConfig) -> Result<LimitVerdict> {
    cfg.validate()?;
    let p = crate::config::clamp_precision(cfg.precision_bits);
    let mut cc = Consts::new().expect("constants cache allocation");

    let mut trace = Vec::with_capacity(cfg.steps);
    let mut x = cfg.start;
    let mut env = BTreeMap::new();
    for _ in 0..cfg.steps {
        env.insert(var.to_string(), BigFloat::from_f64(x, p));
        let v = match eval_bf(e, &env, p, &mut cc) {
            Ok(b) => bf_to_f64(&b),
            // Domain failures name the probe point; callers surface these
            // verbatim in per-order reports.
            Err(Error::DomainError { message }) => {
                return Err(Error::DomainError {
                    message: format!("at {var} = {x}: {message}"),
                })
            }
            Err(other) => return Err(other),
        };
        trace.push((x, v));
        x *= cfg.factor;
    }

    let kind = classify_tail(&trace, cfg);
    Ok(LimitVerdict { kind, trace })
}

const TAIL: usize = 5;

fn classify_tail(trace: &[(f64, f64)], cfg: &ProbeConfig) -> LimitKind {
    if trace.len() < TAIL {
        return LimitKind::Inconclusive;
    }
    let tail: Vec<f64> = trace[trace.len() - TAIL..].iter().map(|p| p.1).collect();
    if tail.iter().any(|v| v.is_nan()) {
        return LimitKind::Inconclusive;
    }
    let last = *tail.last().unwrap();

    if tail.iter().all(|v| v.is_finite()) {
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let maxabs = hi.abs().max(lo.abs());
        if hi - lo <= cfg.stabilize_tol * maxabs.max(1.0) {
            let snapped = if last.abs() <= cfg.stabilize_tol { 0.0 } else { last };
            return LimitKind::Finite(snapped);
        }
    }

    if tail
        .iter()
        .any(|v| !v.is_finite() || v.abs() >= cfg.diverge_threshold)
    {
        return direction(last);
    }
    if tail.windows(2).all(|w| w[1].abs() > w[0].abs()) {
        return direction(last);
    }
    LimitKind::Inconclusive
}

fn direction(last: f64) -> LimitKind {
    if last >= 0.0 {
        LimitKind::PlusInfinity
    } else {
        LimitKind::MinusInfinity
    }
}
