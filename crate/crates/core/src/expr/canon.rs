//! Canonical form: constants folded exactly, Add/Mul flattened and sorted
//! under the fixed total order, like terms collected, like bases merged with
//! summed exponents, exp/ln pairs cancelled.
//!
//! Rewrites assume the positive-domain convention the analyzer works under
//! (expressions are probed on [x_min, inf) with x_min > 1), so (a*b)^w is
//! split into a^w * b^w and ln(a*b) into ln(a) + ln(b) unless a negative
//! constant makes that unsound.

use super::Expr;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Largest integer exponent folded exactly; bigger ones go through exp/ln.
const FOLD_EXPONENT_CAP: i64 = 1 << 20;

/// Sums raised to integer powers up to this unroll into repeated factors so
/// distribution can reach them; larger powers stay folded.
const EXPAND_POW_CAP: i64 = 16;

/// Upper bound on the term count a single distribution step may produce.
/// Past it the product stays factored: still canonical in the fixpoint
/// sense, just not expanded.
const DISTRIBUTE_TERM_CAP: usize = 4096;

/// Repeated single-pass rewriting until a fixed point. The pass cap is
/// defensive; well-formed trees settle within a handful of rounds.
pub fn canonicalize(e: &Expr) -> Expr {
    let mut cur = canon_pass(e);
    for _ in 0..64 {
        let next = canon_pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
    cur
}

fn canon_pass(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Add(xs) => canon_add(xs.iter().map(canon_pass).collect()),
        Expr::Mul(xs) => canon_mul(xs.iter().map(canon_pass).collect()),
        Expr::Pow(b, w) => pow_rules(canon_pass(b), canon_pass(w)),
        Expr::Exp(u) => exp_rules(canon_pass(u)),
        Expr::Ln(u) => ln_rules(canon_pass(u)),
    }
}

/// Flattens nested sums, folds constants, and collects like terms by their
/// constant coefficient: c1*t + c2*t -> (c1+c2)*t.
fn canon_add(terms: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(terms.len());
    for t in terms {
        match t {
            Expr::Add(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }

    let mut const_sum = BigRational::zero();
    let mut by_core: BTreeMap<Expr, BigRational> = BTreeMap::new();
    for t in flat {
        let (coeff, core) = split_coefficient(t);
        match core {
            None => const_sum += coeff,
            Some(core) => {
                let slot = by_core.entry(core).or_insert_with(BigRational::zero);
                *slot += coeff;
            }
        }
    }

    let mut out: Vec<Expr> = Vec::new();
    if !const_sum.is_zero() {
        out.push(Expr::Const(const_sum));
    }
    for (core, coeff) in by_core {
        if coeff.is_zero() {
            continue;
        }
        if coeff.is_one() {
            out.push(core);
        } else {
            let mut factors = vec![Expr::Const(coeff)];
            match core {
                Expr::Mul(fs) => factors.extend(fs),
                other => factors.push(other),
            }
            out.push(Expr::Mul(factors));
        }
    }
    out.sort();

    match out.len() {
        0 => Expr::int(0),
        1 => out.into_iter().next().unwrap(),
        _ => Expr::Add(out),
    }
}

/// (coefficient, core); core None means the term is a bare constant.
fn split_coefficient(t: Expr) -> (BigRational, Option<Expr>) {
    match t {
        Expr::Const(c) => (c, None),
        Expr::Mul(fs) => {
            if let Some(Expr::Const(c)) = fs.first() {
                let c = c.clone();
                let rest: Vec<Expr> = fs.into_iter().skip(1).collect();
                let core = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::Mul(rest)
                };
                (c, Some(core))
            } else {
                (BigRational::one(), Some(Expr::Mul(fs)))
            }
        }
        other => (BigRational::one(), Some(other)),
    }
}

/// Flattens nested products, folds constants, merges exp factors into one
/// exp of a sum, and groups like bases with summed exponents.
fn canon_mul(factors: Vec<Expr>) -> Expr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f {
            Expr::Mul(inner) => flat.extend(inner),
            other => flat.push(other),
        }
    }
    if flat.iter().any(Expr::is_zero) {
        return Expr::int(0);
    }

    let mut const_prod = BigRational::one();
    let mut exp_args: Vec<Expr> = Vec::new();
    let mut by_base: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    for f in flat {
        match f {
            Expr::Const(c) => const_prod *= c,
            Expr::Exp(u) => exp_args.push(*u),
            Expr::Pow(b, w) => by_base.entry(*b).or_default().push(*w),
            other => by_base.entry(other).or_default().push(Expr::int(1)),
        }
    }

    let mut others: Vec<Expr> = Vec::new();
    let mut absorb = |node: Expr, const_prod: &mut BigRational, exp_args: &mut Vec<Expr>| {
        match node {
            Expr::Const(c) => *const_prod *= c,
            Expr::Exp(u) => exp_args.push(*u),
            other => others.push(other),
        }
    };

    for (base, ws) in by_base {
        let exponent = canon_add(ws);
        if exponent.is_zero() {
            continue; // b^0 = 1 under the positive-domain convention
        }
        let node = pow_rules(base, exponent);
        absorb(node, &mut const_prod, &mut exp_args);
    }

    if !exp_args.is_empty() {
        let merged = exp_rules(canon_add(exp_args));
        match merged {
            Expr::Const(c) => const_prod *= c,
            other => others.push(other),
        }
    }

    if const_prod.is_zero() {
        return Expr::int(0);
    }
    if let Some(distributed) = distribute(&const_prod, &others) {
        return distributed;
    }
    others.sort();

    if others.is_empty() {
        return Expr::Const(const_prod);
    }
    if const_prod.is_one() {
        return if others.len() == 1 {
            others.into_iter().next().unwrap()
        } else {
            Expr::Mul(others)
        };
    }
    let mut out = vec![Expr::Const(const_prod)];
    out.extend(others);
    Expr::Mul(out)
}

/// Multiplies out sum factors: (a + b) * r -> a*r + b*r, across the
/// cartesian product when several sums are present. Runs after like-base
/// grouping so cancellations like A * A^-1 are not torn apart first. Returns
/// None when there is nothing to distribute or the expansion would be too
/// large; the raw sum it produces is finished by the following passes.
fn distribute(const_prod: &BigRational, factors: &[Expr]) -> Option<Expr> {
    let mut sums: Vec<&[Expr]> = Vec::new();
    let mut rest: Vec<&Expr> = Vec::new();
    for f in factors {
        match f {
            Expr::Add(ts) => sums.push(ts),
            other => rest.push(other),
        }
    }
    if sums.is_empty() {
        return None;
    }
    let count = sums
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.len()))?;
    if count > DISTRIBUTE_TERM_CAP {
        return None;
    }

    let mut products = Vec::with_capacity(count);
    let mut idx = vec![0usize; sums.len()];
    loop {
        let mut fs: Vec<Expr> = Vec::with_capacity(rest.len() + sums.len() + 1);
        if !const_prod.is_one() {
            fs.push(Expr::Const(const_prod.clone()));
        }
        fs.extend(rest.iter().map(|f| (*f).clone()));
        fs.extend(sums.iter().zip(&idx).map(|(s, &i)| s[i].clone()));
        products.push(match fs.len() {
            1 => fs.into_iter().next().unwrap(),
            _ => Expr::Mul(fs),
        });

        let mut pos = sums.len();
        loop {
            if pos == 0 {
                return Some(Expr::Add(products));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sums[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn pow_rules(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_zero() {
        return Expr::int(1);
    }
    if exponent.is_one() {
        return base;
    }
    if base.is_one() {
        return Expr::int(1);
    }

    if let Expr::Const(bc) = &base {
        if let Expr::Const(wc) = &exponent {
            if wc.is_integer()
                && !(bc.is_zero() && wc.is_negative())
                && wc.numer().abs() <= BigInt::from(FOLD_EXPONENT_CAP)
            {
                return Expr::Const(pow_rational(bc, wc.numer()));
            }
        }
        if bc.is_positive() {
            // a^u with a > 0 becomes e^(ln(a) * u); the next pass tidies it.
            return Expr::exp(Expr::mul(vec![Expr::ln(base.clone()), exponent]));
        }
        return Expr::pow(base, exponent);
    }

    if let (Expr::Add(ts), Expr::Const(wc)) = (&base, &exponent) {
        if wc.is_integer() {
            if let Some(k) = wc.numer().to_i64().filter(|k| (2..=EXPAND_POW_CAP).contains(k)) {
                let fits = ts
                    .len()
                    .checked_pow(k as u32)
                    .is_some_and(|n| n <= DISTRIBUTE_TERM_CAP);
                if fits {
                    // Unrolled so distribution reaches it on the next pass.
                    return Expr::Mul(vec![base; k as usize]);
                }
            }
        }
    }

    match base {
        Expr::Mul(fs) => Expr::Mul(
            fs.into_iter()
                .map(|f| Expr::pow(f, exponent.clone()))
                .collect(),
        ),
        Expr::Pow(b2, w2) => Expr::pow(*b2, Expr::mul(vec![*w2, exponent])),
        Expr::Exp(u) => Expr::exp(Expr::mul(vec![*u, exponent])),
        other => Expr::pow(other, exponent),
    }
}

fn pow_rational(base: &BigRational, exp: &BigInt) -> BigRational {
    let k = exp.to_i64().expect("exponent capped before folding");
    let mag = k.unsigned_abs() as u32;
    let num = base.numer().pow(mag);
    let den = base.denom().pow(mag);
    if k >= 0 {
        BigRational::new(num, den)
    } else {
        BigRational::new(den, num)
    }
}

fn exp_rules(arg: Expr) -> Expr {
    if arg.is_zero() {
        return Expr::int(1);
    }
    if let Some(reduced) = exp_reduce(&arg) {
        return reduced;
    }
    if let Expr::Add(ts) = arg {
        // e^(a+b) splits into e^a * e^b only when some addend reduces on its
        // own. The extracted factors are not Exp nodes, so this cannot fight
        // the Exp merging in canon_mul.
        if ts.iter().any(|t| exp_reduce(t).is_some()) {
            let mut factors = Vec::new();
            let mut residue = Vec::new();
            for t in ts {
                match exp_reduce(&t) {
                    Some(r) => factors.push(r),
                    None => residue.push(t),
                }
            }
            if !residue.is_empty() {
                factors.push(Expr::exp(Expr::add(residue)));
            }
            return Expr::mul(factors);
        }
        return Expr::exp(Expr::Add(ts));
    }
    Expr::exp(arg)
}

/// e^arg rewritten without the outer Exp, when a rule applies: e^ln(v) = v,
/// and e^(w * ln(v)) = v^w when exactly one ln factor is present and its
/// argument is not a constant (constant bases canonicalize the other way,
/// as e^(ln(a) * u)).
fn exp_reduce(arg: &Expr) -> Option<Expr> {
    match arg {
        Expr::Ln(v) => Some((**v).clone()),
        Expr::Mul(fs) => {
            let mut ln_idx = None;
            for (i, f) in fs.iter().enumerate() {
                if let Expr::Ln(v) = f {
                    if matches!(**v, Expr::Const(_)) {
                        continue;
                    }
                    if ln_idx.is_some() {
                        return None;
                    }
                    ln_idx = Some(i);
                }
            }
            let mut rest = fs.clone();
            let v = match rest.remove(ln_idx?) {
                Expr::Ln(v) => *v,
                _ => unreachable!(),
            };
            let w = if rest.len() == 1 {
                rest.into_iter().next().unwrap()
            } else {
                Expr::Mul(rest)
            };
            Some(Expr::pow(v, w))
        }
        _ => None,
    }
}

fn ln_rules(arg: Expr) -> Expr {
    match arg {
        Expr::Const(c) => {
            if c.is_one() {
                return Expr::int(0);
            }
            if c.is_positive() && !c.is_integer() {
                // ln(p/q) = ln(p) - ln(q) keeps logarithm arguments integral.
                let p = Expr::Const(BigRational::from_integer(c.numer().clone()));
                let q = Expr::Const(BigRational::from_integer(c.denom().clone()));
                let neg_ln_q = Expr::mul(vec![Expr::int(-1), Expr::ln(q)]);
                return if c.numer().is_one() {
                    neg_ln_q
                } else {
                    Expr::add(vec![Expr::ln(p), neg_ln_q])
                };
            }
            Expr::ln(Expr::Const(c))
        }
        Expr::Exp(w) => *w,
        Expr::Pow(b, w) => {
            if is_nonpositive_const(&b) {
                Expr::ln(Expr::pow(*b, *w))
            } else {
                Expr::mul(vec![*w, Expr::ln(*b)])
            }
        }
        Expr::Mul(fs) => {
            if fs.iter().any(is_nonpositive_const) {
                Expr::ln(Expr::Mul(fs))
            } else {
                Expr::Add(fs.into_iter().map(Expr::ln).collect())
            }
        }
        other => Expr::ln(other),
    }
}

fn is_nonpositive_const(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if !c.is_positive())
}
