//! The bounded-derivative criterion: for each order n, probe |f^(n)| on
//! [x_min, inf) and decide whether some M bounds it, then find the smallest
//! such order. Verdicts rest on grid evidence, never on proof; every report
//! says so.

use rayon::prelude::*;

use crate::calculus::{differentiate, limit_probe, nth_derivative, LimitKind};
use crate::config::{AnalysisConfig, ProbeConfig};
use crate::error::{Error, Result};
use crate::expr::{canonicalize, Expr};

/// Safety margin applied on top of the observed sup when quoting M.
const M_SAFETY: f64 = 1.01;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundStatus {
    Bounded { m_estimate: f64 },
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderVerdict {
    pub order: usize,
    /// Largest |f^(n)| observed on the probe grid; NaN when the order failed.
    pub sup_estimate: f64,
    pub tail: LimitKind,
    pub status: BoundStatus,
    /// Set when the order could not be analyzed; carries the error text.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessReport {
    pub function: Expr,
    pub variable: String,
    pub x_min: f64,
    /// Ascending in order; stops at the first Bounded entry unless the run
    /// asked for all orders.
    pub verdicts: Vec<OrderVerdict>,
    pub bounding_order: Option<usize>,
    /// True when two consecutive orders both diverge but with opposite
    /// signs. Genuine derivatives cannot do this (a derivative running to
    /// -inf drags its antiderivative down with it), so this flags numerical
    /// artifacts rather than analysis results.
    pub alternating_sign_note: bool,
    /// Always true: grid probing estimates a sup, it does not certify one.
    pub numerical_evidence_only: bool,
}

/// Probes the n-th derivative of `f` on [x_min, inf): grid sup plus tail
/// limit, combined into a bound status. The same geometric grid feeds both,
/// so the sup and the tail always describe the same evidence.
pub fn order_verdict(
    f: &Expr,
    var: &str,
    n: usize,
    x_min: f64,
    cfg: &AnalysisConfig,
) -> Result<OrderVerdict> {
    if n == 0 {
        return Err(Error::InvalidConfig {
            message: "derivative order must be >= 1".into(),
        });
    }
    let g = nth_derivative(f, var, n, &cfg.calc())?;
    probe_order(&g, var, n, x_min, cfg)
}

// Probes an already-differentiated expression. Split out so the order scan
// can reuse each derivative when computing the next instead of starting
// from f every time.
fn probe_order(
    g: &Expr,
    var: &str,
    n: usize,
    x_min: f64,
    cfg: &AnalysisConfig,
) -> Result<OrderVerdict> {
    let probe = ProbeConfig {
        start: x_min,
        ..cfg.probe.clone()
    };
    let tail = limit_probe(g, var, &probe)?;
    let sup_estimate = tail
        .trace
        .iter()
        .fold(0.0f64, |acc, &(_, v)| acc.max(v.abs()));
    let status = match tail.kind {
        LimitKind::PlusInfinity | LimitKind::MinusInfinity => BoundStatus::Unbounded,
        _ if sup_estimate.is_infinite() => BoundStatus::Unbounded,
        LimitKind::Finite(t) => BoundStatus::Bounded {
            m_estimate: sup_estimate.max(t.abs()) * M_SAFETY,
        },
        LimitKind::Inconclusive => BoundStatus::Inconclusive,
    };
    Ok(OrderVerdict {
        order: n,
        sup_estimate,
        tail: tail.kind,
        status,
        reason: None,
    })
}

/// Scans n = 1..n_max for the smallest order whose derivative stays bounded.
/// Sequential with early exit by default; when `cfg.full` is set all orders
/// are computed (in parallel, results merged in order) so reports can show
/// the whole profile. An order that errors is recorded as Inconclusive with
/// the error text and ends the scan, since higher orders differentiate
/// through the same failure.
pub fn find_bounding_order(f: &Expr, var: &str, cfg: &AnalysisConfig) -> Result<BoundednessReport> {
    cfg.validate()?;
    let function = canonicalize(f);
    let node_cap = cfg.calc().node_cap;

    // One derivative chain feeds every order: g_n is differentiated from
    // g_{n-1}, not recomputed from f.
    let verdicts: Vec<OrderVerdict> = if cfg.full {
        let mut chain: Vec<(usize, std::result::Result<Expr, String>)> = Vec::new();
        let mut cur = function.clone();
        let mut failed: Option<String> = None;
        for n in 1..=cfg.n_max {
            if let Some(msg) = &failed {
                chain.push((n, Err(msg.clone())));
                continue;
            }
            cur = differentiate(&cur, var);
            let nodes = cur.node_count();
            if nodes > node_cap {
                let msg = Error::ExpressionTooLarge {
                    nodes,
                    cap: node_cap,
                }
                .to_string();
                failed = Some(msg.clone());
                chain.push((n, Err(msg)));
            } else {
                chain.push((n, Ok(cur.clone())));
            }
        }
        chain
            .par_iter()
            .map(|(n, g)| match g {
                Ok(expr) => run_order(expr, var, *n, cfg),
                Err(msg) => failed_order(*n, msg.clone()),
            })
            .collect()
    } else {
        let mut out = Vec::new();
        let mut cur = function.clone();
        for n in 1..=cfg.n_max {
            cur = differentiate(&cur, var);
            let nodes = cur.node_count();
            let v = if nodes > node_cap {
                failed_order(
                    n,
                    Error::ExpressionTooLarge {
                        nodes,
                        cap: node_cap,
                    }
                    .to_string(),
                )
            } else {
                run_order(&cur, var, n, cfg)
            };
            let stop = v.reason.is_some() || matches!(v.status, BoundStatus::Bounded { .. });
            out.push(v);
            if stop {
                break;
            }
        }
        out
    };

    let bounding_order = verdicts
        .iter()
        .find(|v| matches!(v.status, BoundStatus::Bounded { .. }))
        .map(|v| v.order);
    let alternating_sign_note = has_alternating_divergence(&verdicts);
    Ok(BoundednessReport {
        function,
        variable: var.to_string(),
        x_min: cfg.x_min,
        verdicts,
        bounding_order,
        alternating_sign_note,
        numerical_evidence_only: true,
    })
}

// Probes a prepared n-th derivative, absorbing errors into the verdict.
fn run_order(g: &Expr, var: &str, n: usize, cfg: &AnalysisConfig) -> OrderVerdict {
    match probe_order(g, var, n, cfg.x_min, cfg) {
        Ok(v) => v,
        Err(e) => failed_order(n, e.to_string()),
    }
}

fn failed_order(n: usize, reason: String) -> OrderVerdict {
    OrderVerdict {
        order: n,
        sup_estimate: f64::NAN,
        tail: LimitKind::Inconclusive,
        status: BoundStatus::Inconclusive,
        reason: Some(reason),
    }
}

fn has_alternating_divergence(verdicts: &[OrderVerdict]) -> bool {
    verdicts.windows(2).any(|w| {
        matches!(
            (&w[0].tail, &w[1].tail),
            (LimitKind::PlusInfinity, LimitKind::MinusInfinity)
                | (LimitKind::MinusInfinity, LimitKind::PlusInfinity)
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn cfg() -> AnalysisConfig {
        AnalysisConfig::default()
    }

    #[test]
    fn xlnx_is_bounded_exactly_at_order_two() {
        let f = parse("x * ln(x)").unwrap();
        // At x_min = 1 the sup of |1/x| is 1, so M lands on the safety
        // factor itself.
        let v = order_verdict(&f, "x", 2, 1.0, &cfg()).unwrap();
        match v.status {
            BoundStatus::Bounded { m_estimate } => assert!((m_estimate - 1.01).abs() < 1e-9),
            ref s => panic!("expected Bounded, got {s:?}"),
        }
        assert_eq!(v.tail, LimitKind::Finite(0.0));

        let report = find_bounding_order(&f, "x", &cfg()).unwrap();
        assert_eq!(report.bounding_order, Some(2));
        assert_eq!(report.verdicts.len(), 2);
        assert_eq!(report.verdicts[0].status, BoundStatus::Unbounded);
        assert!(report.numerical_evidence_only);
    }

    #[test]
    fn two_pow_x_third_derivative_is_unbounded() {
        let f = parse("2^x").unwrap();
        let v = order_verdict(&f, "x", 3, 1.0, &cfg()).unwrap();
        assert_eq!(v.status, BoundStatus::Unbounded);
        assert_eq!(v.tail, LimitKind::PlusInfinity);
    }

    #[test]
    fn flat_second_derivative_reports_m_of_zero() {
        let f = parse("x").unwrap();
        let v = order_verdict(&f, "x", 2, 1.0, &cfg()).unwrap();
        assert_eq!(v.status, BoundStatus::Bounded { m_estimate: 0.0 });
        assert_eq!(v.sup_estimate, 0.0);
    }

    #[test]
    fn fixtures_partition_into_unbounded_and_bounded() {
        for src in ["exp(x)", "2^x", "2^(sqrt(x))", "x^(log2(x))"] {
            let f = parse(src).unwrap();
            let report = find_bounding_order(&f, "x", &cfg()).unwrap();
            assert_eq!(report.bounding_order, None, "{src}");
            assert_eq!(report.verdicts.len(), cfg().n_max, "{src}");
            for v in &report.verdicts {
                assert_eq!(v.status, BoundStatus::Unbounded, "{src} at n={}", v.order);
            }
            assert!(!report.alternating_sign_note, "{src}");
        }
        for (src, order) in [
            ("x * ln(x)", 2),
            ("2^(log2(x))", 1),
            ("2^(log2(log2(x)))", 1),
        ] {
            let f = parse(src).unwrap();
            let report = find_bounding_order(&f, "x", &cfg()).unwrap();
            assert_eq!(report.bounding_order, Some(order), "{src}");
        }
    }

    #[test]
    fn full_mode_covers_every_order_and_agrees_with_early_exit() {
        let f = parse("x * ln(x)").unwrap();
        let mut full_cfg = cfg();
        full_cfg.full = true;
        let full = find_bounding_order(&f, "x", &full_cfg).unwrap();
        assert_eq!(full.verdicts.len(), full_cfg.n_max);
        assert_eq!(full.bounding_order, Some(2));
        let orders: Vec<usize> = full.verdicts.iter().map(|v| v.order).collect();
        assert_eq!(orders, (1..=full_cfg.n_max).collect::<Vec<_>>());

        let early = find_bounding_order(&f, "x", &cfg()).unwrap();
        for (a, b) in early.verdicts.iter().zip(&full.verdicts) {
            assert_eq!(a, b);
        }
        // Parallel scheduling must not leak into results.
        let again = find_bounding_order(&f, "x", &full_cfg).unwrap();
        assert_eq!(full, again);
    }

    #[test]
    fn doubling_grid_density_preserves_statuses() {
        let mut dense = cfg();
        dense.probe.factor = dense.probe.factor.sqrt();
        dense.probe.steps *= 2;
        for src in ["x * ln(x)", "2^x", "2^(log2(log2(x)))"] {
            let f = parse(src).unwrap();
            let base = find_bounding_order(&f, "x", &cfg()).unwrap();
            let fine = find_bounding_order(&f, "x", &dense).unwrap();
            assert_eq!(base.bounding_order, fine.bounding_order, "{src}");
            for (a, b) in base.verdicts.iter().zip(&fine.verdicts) {
                match (&a.status, &b.status) {
                    (
                        BoundStatus::Bounded { m_estimate: ma },
                        BoundStatus::Bounded { m_estimate: mb },
                    ) => {
                        assert!((ma - mb).abs() <= 0.05 * ma.abs().max(1e-12), "{src}");
                    }
                    (sa, sb) => assert_eq!(sa, sb, "{src} at n={}", a.order),
                }
            }
        }
    }

    #[test]
    fn bounded_m_estimate_dominates_the_grid_sup() {
        for src in ["x * ln(x)", "2^(log2(log2(x)))"] {
            let f = parse(src).unwrap();
            let report = find_bounding_order(&f, "x", &cfg()).unwrap();
            let v = report.verdicts.last().unwrap();
            if let BoundStatus::Bounded { m_estimate } = v.status {
                assert!(m_estimate >= v.sup_estimate, "{src}");
            } else {
                panic!("{src}: expected a bounded final verdict");
            }
        }
    }

    #[test]
    fn alternating_divergence_is_flagged_on_synthetic_verdicts() {
        let mk = |order, tail| OrderVerdict {
            order,
            sup_estimate: f64::INFINITY,
            tail,
            status: BoundStatus::Unbounded,
            reason: None,
        };
        let alternating = vec![
            mk(1, LimitKind::PlusInfinity),
            mk(2, LimitKind::MinusInfinity),
            mk(3, LimitKind::PlusInfinity),
        ];
        assert!(has_alternating_divergence(&alternating));
        let steady = vec![
            mk(1, LimitKind::PlusInfinity),
            mk(2, LimitKind::PlusInfinity),
        ];
        assert!(!has_alternating_divergence(&steady));
    }

    #[test]
    fn failing_orders_surface_as_inconclusive_with_reason() {
        // The first derivative of (2-x)*ln(2-x) leaves its domain inside the
        // probe range, so order 1 records the failure and the scan stops.
        let f = parse("(2 - x) * ln(2 - x)").unwrap();
        let report = find_bounding_order(&f, "x", &cfg()).unwrap();
        assert_eq!(report.verdicts.len(), 1);
        let v = &report.verdicts[0];
        assert_eq!(v.status, BoundStatus::Inconclusive);
        let reason = v.reason.as_ref().unwrap();
        assert!(reason.contains("at x ="), "reason was: {reason}");
        assert_eq!(report.bounding_order, None);
        assert!(v.sup_estimate.is_nan());
    }

    #[test]
    fn order_zero_is_rejected() {
        let f = parse("x").unwrap();
        assert!(matches!(
            order_verdict(&f, "x", 0, 1.0, &cfg()),
            Err(Error::InvalidConfig { .. })
        ));
    }
}
