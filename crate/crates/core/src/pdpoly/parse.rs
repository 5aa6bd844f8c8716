//! Element syntax.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := integer | name ['^' integer] | 'g(' expr ',' integer ')' | '(' expr ')'
//! ```
//!
//! `g(e, n)` is the n-th divided power of e; a PD variable `y` alone means gamma_1(y).
//! Whitespace is ignored.

use super::{Elem, PdAlgebra, PdError};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at position {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alg: &'a Arc<PdAlgebra>,
}

pub fn parse_elem(alg: &Arc<PdAlgebra>, s: &str) -> Result<Elem, PdError> {
    let mut p = Parser { src: s.as_bytes(), pos: 0, alg };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected '{}'", p.src[p.pos] as char)).into());
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: String) -> ParseError {
        ParseError { pos: self.pos, msg }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Elem, PdError> {
        let mut neg = false;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            neg = true;
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Elem, PdError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer".into()));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| ParseError { pos: start, msg: "integer too large".into() })
    }

    fn name(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn factor(&mut self) -> Result<Elem, PdError> {
        let alg = self.alg;
        match self.peek() {
            None => Err(self.err("unexpected end of input".into()).into()),
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Elem::constant(alg, (n % alg.ring.q()) as i64))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.name();
                if name == "g" && self.peek() == Some(b'(') {
                    self.pos += 1;
                    let inner = self.expr()?;
                    self.expect(b',')?;
                    let n = self.integer()?;
                    self.expect(b')')?;
                    return inner.gamma(n as u32).map_err(|e| match e {
                        PdError::NotInPdIdeal(m) => {
                            ParseError { pos: start, msg: format!("{m} is not in the PD ideal") }.into()
                        }
                        other => other,
                    });
                }
                let Some(k) = alg.var_index(&name) else {
                    return Err(ParseError { pos: start, msg: format!("unknown variable '{name}'") }.into());
                };
                let mut exp = 1;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    exp = self.integer()?;
                }
                if k < alg.nbase() {
                    Ok(Elem::gamma_var(alg, k, exp as u32))
                } else {
                    Ok(Elem::var(alg, k).pow(exp as u32))
                }
            }
            Some(c) => Err(self.err(format!("unexpected '{}'", c as char)).into()),
        }
    }
}
