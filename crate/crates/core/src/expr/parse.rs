//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := primary ('^' factor)?          (right associative)
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! number  := digits ('.' digits)?
//! ```
//!
//! `log` and `ln` are the natural logarithm; `log2(u)` lowers to
//! ln(u)/ln(2), `sqrt(u)` to u^(1/2), subtraction to a (-1)-scaled sum and
//! division to a (-1)-exponent power. The returned tree is canonical.

use super::{canonicalize, Expr};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("'+', '-', '*', '/', '^', or end of input"));
    }
    Ok(canonicalize(&e))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, expected: &str) -> Error {
        Error::SyntaxError {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.src.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    terms.push(Expr::mul(vec![Expr::int(-1), t]));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.into_iter().next().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    factors.push(self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    factors.push(Expr::pow(f, Expr::int(-1)));
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 {
            factors.into_iter().next().unwrap()
        } else {
            Expr::Mul(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let f = self.factor()?;
            return Ok(Expr::mul(vec![Expr::int(-1), f]));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat(b'^') {
            // Right associative, and the exponent may carry a unary minus.
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("')'"));
                }
                Ok(e)
            }
            Some(b) if b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.identifier(),
            _ => Err(self.syntax("a number, an identifier, '-', or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac_start = self.pos;
            while matches!(self.src.get(self.pos), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(self.syntax("digits after the decimal point"));
            }
            let frac_part = &self.src[frac_start..self.pos];
            let mut digits = Vec::with_capacity(int_part.len() + frac_part.len());
            digits.extend_from_slice(int_part);
            digits.extend_from_slice(frac_part);
            let numer = BigInt::parse_bytes(&digits, 10).expect("digits only");
            let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
            return Ok(Expr::Const(BigRational::new(numer, denom)));
        }
        let numer = BigInt::parse_bytes(int_part, 10).expect("digits only");
        Ok(Expr::Const(BigRational::from_integer(numer)))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(
            self.src.get(self.pos),
            Some(b) if b.is_ascii_alphanumeric() || *b == b'_'
        ) {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii identifier")
            .to_string();

        if self.peek() != Some(b'(') {
            return Ok(Expr::Var(name));
        }
        self.pos += 1; // consume '('
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        if !self.eat(b')') {
            return Err(self.syntax("',' or ')'"));
        }

        let known = matches!(name.as_str(), "exp" | "ln" | "log" | "log2" | "sqrt");
        if !known {
            return Err(Error::UnknownFunction {
                name,
                offset: start,
            });
        }
        if args.len() != 1 {
            return Err(Error::ArityError {
                function: name,
                expected: 1,
                found: args.len(),
            });
        }
        let arg = args.into_iter().next().unwrap();
        Ok(match name.as_str() {
            "exp" => Expr::exp(arg),
            "ln" | "log" => Expr::ln(arg),
            "log2" => Expr::log2(arg),
            "sqrt" => Expr::pow(arg, Expr::Const(BigRational::new(BigInt::one(), BigInt::from(2)))),
            _ => unreachable!(),
        })
    }
}
