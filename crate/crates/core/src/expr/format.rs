//! Printer. The contract is round-trip stability: the output reparses to a
//! tree structurally equal to the canonicalized input. Negative exponents
//! render as divisions ("1/x", "x / y^2") and negative coefficients fold
//! into "-" signs, both of which the parser lowers right back.

use super::{rational_string, Expr};
use num_rational::BigRational;
use num_traits::{One, Signed};

pub fn format(e: &Expr) -> String {
    render(e, 0)
}

/// Effective precedence of the *rendered* text: sums 1, products and anything
/// printed with a division or sign 2, powers 3, atoms 4.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) => 1,
        Expr::Mul(_) => 2,
        Expr::Pow(_, _) => {
            if negated_exponent(e).is_some() {
                2
            } else {
                3
            }
        }
        Expr::Const(c) => {
            if c.is_integer() && !c.is_negative() {
                4
            } else {
                2
            }
        }
        Expr::Var(_) | Expr::Exp(_) | Expr::Ln(_) => 4,
    }
}

fn render(e: &Expr, min_prec: u8) -> String {
    let s = render_raw(e);
    if prec(e) < min_prec {
        format!("({s})")
    } else {
        s
    }
}

fn render_raw(e: &Expr) -> String {
    match e {
        Expr::Const(c) => rational_string(c),
        Expr::Var(v) => v.clone(),
        Expr::Add(terms) => render_add(terms),
        Expr::Mul(factors) => render_product(factors),
        Expr::Pow(_, _) => {
            if negated_exponent(e).is_some() {
                render_product(std::slice::from_ref(e))
            } else {
                let (b, w) = match e {
                    Expr::Pow(b, w) => (b, w),
                    _ => unreachable!(),
                };
                format!("{}^{}", render(b, 4), render(w, 4))
            }
        }
        Expr::Exp(u) => format!("exp({})", render(u, 0)),
        Expr::Ln(u) => format!("ln({})", render(u, 0)),
    }
}

fn render_add(terms: &[Expr]) -> String {
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        match flip_negative(t) {
            Some(flipped) => {
                out.push_str(if i == 0 { "-" } else { " - " });
                out.push_str(&render(&flipped, 2));
            }
            None => {
                if i > 0 {
                    out.push_str(" + ");
                }
                out.push_str(&render(t, 2));
            }
        }
    }
    out
}

/// Splits factors into numerator and denominator (negative exponents) and
/// renders `num / den`.
fn render_product(factors: &[Expr]) -> String {
    let mut nums: Vec<String> = Vec::new();
    let mut dens: Vec<(Expr, Expr)> = Vec::new();
    let mut negative = false;

    for f in factors {
        if let Some((base, pos_exp)) = negated_exponent(f) {
            dens.push((base, pos_exp));
            continue;
        }
        if let Expr::Const(c) = f {
            if c.is_negative() {
                negative = !negative;
                let mag = -c.clone();
                if !mag.is_one() {
                    nums.push(rational_string(&mag));
                }
                continue;
            }
        }
        nums.push(render(f, 2));
    }

    let num_str = if nums.is_empty() {
        "1".to_string()
    } else {
        nums.join(" * ")
    };
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&num_str);

    match dens.len() {
        0 => {}
        1 => {
            let (b, w) = dens.into_iter().next().unwrap();
            out.push_str("/");
            out.push_str(&render_den_factor(&b, &w, 3));
        }
        _ => {
            let parts: Vec<String> = dens
                .iter()
                .map(|(b, w)| render_den_factor(b, w, 2))
                .collect();
            out.push_str("/(");
            out.push_str(&parts.join(" * "));
            out.push(')');
        }
    }
    if out == "-1" {
        return out;
    }
    if let Some(rest) = out.strip_prefix("-1 * ") {
        // -1 * x reads better as -x and parses back identically.
        return format!("-{rest}");
    }
    out
}

fn render_den_factor(base: &Expr, exp: &Expr, min_prec: u8) -> String {
    if exp.is_one() {
        render(base, min_prec)
    } else {
        render(&Expr::pow(base.clone(), exp.clone()), min_prec)
    }
}

/// For x^(-w) returns (x, w). Detects a bare negative constant exponent and a
/// product led by a negative constant. Constant bases are excluded: the only
/// one canonicalization leaves in a Pow is 0, and its flipped power folds on
/// re-parsing (0^2 collapses to 0), so the division sugar would not
/// round-trip.
fn negated_exponent(e: &Expr) -> Option<(Expr, Expr)> {
    let (b, w) = match e {
        Expr::Pow(b, w) => (b, w),
        _ => return None,
    };
    if matches!(**b, Expr::Const(_)) {
        return None;
    }
    let flipped = flip_negative(w)?;
    Some(((**b).clone(), flipped))
}

/// Negates terms that carry an explicit negative constant: -c, or (-c)*rest.
fn flip_negative(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c.clone())),
        Expr::Mul(fs) => match fs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let mag: BigRational = -c.clone();
                let rest: Vec<Expr> = fs[1..].to_vec();
                if mag.is_one() {
                    Some(if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::Mul(rest)
                    })
                } else {
                    let mut out = vec![Expr::Const(mag)];
                    out.extend(rest);
                    Some(Expr::Mul(out))
                }
            }
            _ => None,
        },
        _ => None,
    }
}
