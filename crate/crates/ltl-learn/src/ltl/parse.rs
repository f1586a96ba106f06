//! Prefix text syntax for formulas.
//!
//! Operators: `AND(a, b)`, `OR(a, b)`, `G[l,h](a)`, `U[l,h](a, b)`,
//! `F[l,h](a)`, `SEQ(a, b)`, `AVOID(a)`, `AFTER(a, b)`, `NOT(p)`.
//! APs are `p1`, `p2`, ... `NOT` is only legal directly above an AP.
//! `format!("{formula}")` produces this syntax back; `parse(format(f))`
//! is structurally the identity.

use super::Formula;

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos,
            msg: msg.into(),
        })
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
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an operator or AP token");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_owned())
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|e| ParseError {
                pos: start,
                msg: format!("bad number: {e}"),
            })
    }

    fn interval(&mut self) -> Result<(usize, usize), ParseError> {
        self.expect(b'[')?;
        let lo = self.number()?;
        self.expect(b',')?;
        let hi = self.number()?;
        self.expect(b']')?;
        if lo > hi {
            return self.err(format!("interval [{lo},{hi}] has lo > hi"));
        }
        Ok((lo, hi))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let word = self.ident()?;
        match word.as_str() {
            "AND" | "OR" | "SEQ" | "AFTER" => {
                self.expect(b'(')?;
                let a = self.formula()?;
                self.expect(b',')?;
                let b = self.formula()?;
                self.expect(b')')?;
                Ok(match word.as_str() {
                    "AND" => Formula::and(a, b),
                    "OR" => Formula::or(a, b),
                    "SEQ" => Formula::seq(a, b),
                    _ => Formula::after(a, b),
                })
            }
            "AVOID" => {
                self.expect(b'(')?;
                let a = self.formula()?;
                self.expect(b')')?;
                Ok(Formula::avoid(a))
            }
            "G" | "F" => {
                let (lo, hi) = self.interval()?;
                self.expect(b'(')?;
                let a = self.formula()?;
                self.expect(b')')?;
                Ok(if word == "G" {
                    Formula::always(lo, hi, a)
                } else {
                    Formula::eventually(lo, hi, a)
                })
            }
            "U" => {
                let (lo, hi) = self.interval()?;
                self.expect(b'(')?;
                let a = self.formula()?;
                self.expect(b',')?;
                let b = self.formula()?;
                self.expect(b')')?;
                Ok(Formula::until(lo, hi, a, b))
            }
            "NOT" => {
                self.expect(b'(')?;
                let inner = self.formula()?;
                self.expect(b')')?;
                match inner {
                    Formula::Ap(i) => Ok(Formula::not_ap(i)),
                    Formula::NotAp(i) => Ok(Formula::ap(i)),
                    other => self.err(format!(
                        "negation is only allowed directly above an AP, found {other}"
                    )),
                }
            }
            w if w.starts_with('p') => match w[1..].parse::<usize>() {
                Ok(i) if i >= 1 => Ok(Formula::Ap(i)),
                _ => self.err(format!("bad AP token '{w}'")),
            },
            w => self.err(format!("unknown operator '{w}'")),
        }
    }
}

/// Parse the prefix syntax into a [`Formula`].
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let f = p.formula()?;
    if p.peek().is_some() {
        return p.err("trailing input after formula");
    }
    Ok(f)
}
