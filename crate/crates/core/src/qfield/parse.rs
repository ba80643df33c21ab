//! Recursive-descent parser for the text form printed by `RatFunc::render`.
//!
//! Grammar: `expr = ["-"] term (("+"|"-") term)*`, `term = factor (("*"|"/") factor)*`,
//! `factor = atom ["^" ["-"] int]`, `atom = int | "q" | "v" | "zeta" | "(" expr ")"`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::cyclo::CycRational;
use super::ratfunc::RatFunc;
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{} at offset {}", msg, self.pos))
    }

    fn expr(&mut self) -> Result<RatFunc> {
        let neg = self.eat(b'-');
        let mut acc = self.term()?;
        if neg {
            acc = -acc;
        }
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RatFunc> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.factor()?;
            } else if self.eat(b'/') {
                acc = acc.checked_div(&self.factor()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<RatFunc> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let neg = self.eat(b'-');
            let e = self.integer()?;
            let e: i64 = e
                .try_into()
                .map_err(|_| self.err("exponent out of range"))?;
            return base.pow(if neg { -e } else { e });
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn atom(&mut self) -> Result<RatFunc> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(RatFunc::constant(CycRational::from_rational(
                    BigRational::from_integer(n),
                )))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"q" => Ok(RatFunc::q_pow(1)),
                    b"v" => Ok(RatFunc::v_pow(1)),
                    b"zeta" => Ok(RatFunc::constant(CycRational::zeta_pow(1))),
                    other => Err(Error::Parse(format!(
                        "unknown symbol `{}`",
                        String::from_utf8_lossy(other)
                    ))),
                }
            }
            _ => Err(self.err("unexpected input")),
        }
    }
}

/// Parses an arithmetic expression in `q`, `v` (with `v^2 = q`) and `zeta`.
pub fn parse_ratfunc(s: &str) -> Result<RatFunc> {
    let mut p = Parser {
        src: s.as_bytes(),
        pos: 0,
    };
    let out = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(out)
}
