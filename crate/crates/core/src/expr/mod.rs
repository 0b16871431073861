//! Expression language for complexity functions: tree, parser, printer,
//! canonical simplifier.
//!
//! Trees are immutable values. Every operation here is pure; `parse` and
//! `substitute` hand back canonical trees, and `canonicalize` is idempotent.

mod canon;
mod format;
mod parse;

pub use canon::canonicalize;
pub use format::format;
pub use parse::parse;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Expression node. Variant declaration order doubles as the canonical total
/// order used when sorting Add/Mul operands, so the derived `Ord` is load
/// bearing: Const < Var < Add < Mul < Pow < Exp < Ln.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    /// Exact rational constant.
    Const(BigRational),
    Var(String),
    /// n-ary sum, >= 2 operands once canonical.
    Add(Vec<Expr>),
    /// n-ary product, >= 2 operands once canonical.
    Mul(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    /// e^u
    Exp(Box<Expr>),
    /// natural logarithm
    Ln(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        Expr::Add(terms)
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        Expr::Mul(factors)
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::Exp(Box::new(arg))
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr::Ln(Box::new(arg))
    }

    /// ln(x)/ln(2), the shape `log2(x)` lowers to.
    pub fn log2(arg: Expr) -> Expr {
        Expr::mul(vec![
            Expr::ln(arg),
            Expr::pow(Expr::ln(Expr::int(2)), Expr::int(-1)),
        ])
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Add(xs) | Expr::Mul(xs) => 1 + xs.iter().map(Expr::node_count).sum::<usize>(),
            Expr::Pow(b, e) => 1 + b.node_count() + e.node_count(),
            Expr::Exp(u) | Expr::Ln(u) => 1 + u.node_count(),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().any(|x| x.contains_var(name)),
            Expr::Pow(b, e) => b.contains_var(name) || e.contains_var(name),
            Expr::Exp(u) | Expr::Ln(u) => u.contains_var(name),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Expr::Pow(b, e) => {
                b.collect_vars(out);
                e.collect_vars(out);
            }
            Expr::Exp(u) | Expr::Ln(u) => u.collect_vars(out),
        }
    }

    /// Replaces every occurrence of the variable and canonicalizes the result.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        canonicalize(&self.substitute_raw(name, replacement))
    }

    fn substitute_raw(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => {
                if v == name {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
            Expr::Add(xs) => Expr::Add(
                xs.iter()
                    .map(|x| x.substitute_raw(name, replacement))
                    .collect(),
            ),
            Expr::Mul(xs) => Expr::Mul(
                xs.iter()
                    .map(|x| x.substitute_raw(name, replacement))
                    .collect(),
            ),
            Expr::Pow(b, e) => Expr::pow(
                b.substitute_raw(name, replacement),
                e.substitute_raw(name, replacement),
            ),
            Expr::Exp(u) => Expr::exp(u.substitute_raw(name, replacement)),
            Expr::Ln(u) => Expr::ln(u.substitute_raw(name, replacement)),
        }
    }

    /// Nested `{"op": ..., "args": [...]}` encoding used by the JSON reports.
    /// Constants are kept exact as `p/q` strings.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Expr::Const(c) => json!({ "op": "const", "value": rational_string(c) }),
            Expr::Var(v) => json!({ "op": "var", "name": v }),
            Expr::Add(xs) => {
                json!({ "op": "add", "args": xs.iter().map(Expr::to_json).collect::<Vec<_>>() })
            }
            Expr::Mul(xs) => {
                json!({ "op": "mul", "args": xs.iter().map(Expr::to_json).collect::<Vec<_>>() })
            }
            Expr::Pow(b, e) => json!({ "op": "pow", "args": [b.to_json(), e.to_json()] }),
            Expr::Exp(u) => json!({ "op": "exp", "args": [u.to_json()] }),
            Expr::Ln(u) => json!({ "op": "ln", "args": [u.to_json()] }),
        }
    }
}

pub(crate) fn rational_string(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else if c.is_negative() {
        format!("-{}/{}", c.numer().magnitude(), c.denom())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format(self))
    }
}
