//! Recursive-descent parser for the infix expression grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' exponent)?
//! exponent:= '-'? INT | '(' '-'? INT ')'
//! primary := NUMBER | IDENT | FUNC '(' expr ')' | TAG '[' KAPPA ']' '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::atom::{Func, Tag};
use super::{Expr, Rational, SymbolTable};
use crate::error::SymError;

pub fn parse(text: &str, symbols: &SymbolTable) -> Result<Expr, SymError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        symbols,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    symbols: &'a SymbolTable,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> SymError {
        SymError::Syntax {
            position: self.pos,
            message: message.into(),
        }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), SymError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(got) => Err(self.error(format!("expected `{}`, found `{}`", c as char, got as char))),
                None => Err(self.error(format!("expected `{}`, found end of input", c as char))),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, SymError> {
        let mut items = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                items.push(self.term()?);
            } else if self.eat(b'-') {
                items.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(items))
    }

    fn term(&mut self) -> Result<Expr, SymError> {
        let mut items = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                items.push(self.unary()?);
            } else if self.eat(b'/') {
                items.push(self.unary()?.pow(-1));
            } else {
                break;
            }
        }
        Ok(Expr::product(items))
    }

    fn unary(&mut self) -> Result<Expr, SymError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SymError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let paren = self.eat(b'(');
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        let digits = self.digits();
        if digits.is_empty() {
            self.pos = start;
            return Err(self.error("exponent must be an integer literal"));
        }
        if self.src.get(self.pos) == Some(&b'.') {
            return Err(self.error("exponent must be an integer literal"));
        }
        let k: i64 = digits.parse().map_err(|_| self.error("exponent out of range"))?;
        if paren {
            self.expect(b')')?;
        }
        Ok(Expr::from_node(super::Node::Pow(base, if negative { -k } else { k })))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    /// Integer or decimal literal, converted exactly.
    fn number(&mut self) -> Result<Rational, SymError> {
        let int_part = self.digits();
        let mut value = Rational::from_integer(int_part.parse::<BigInt>().unwrap_or_default());
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.digits();
            if frac.is_empty() {
                return Err(self.error("expected digits after decimal point"));
            }
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            let f: BigInt = frac.parse().unwrap_or_default();
            value += Rational::new(f, scale);
        }
        Ok(value)
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn kappa(&mut self) -> Result<Rational, SymError> {
        let negative = self.eat(b'-');
        if !negative {
            self.eat(b'+');
        }
        self.skip_ws();
        if !matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
            return Err(self.error("expected a signed decimal curvature tag"));
        }
        let mut k = self.number()?;
        if self.eat(b'/') {
            self.skip_ws();
            let den = self.number()?;
            if den.is_zero() || !den.denom().is_one() {
                return Err(self.error("invalid rational curvature tag"));
            }
            k /= den;
        }
        Ok(if negative { -k } else { k })
    }

    fn primary(&mut self) -> Result<Expr, SymError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::constant(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                let tag = match name.as_str() {
                    "S" => Some(Tag::S),
                    "C" => Some(Tag::C),
                    "T" => Some(Tag::T),
                    _ => None,
                };
                if let Some(tag) = tag {
                    if self.peek() == Some(b'[') {
                        self.pos += 1;
                        let kappa = self.kappa()?;
                        self.expect(b']')?;
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        return Ok(Expr::tagged(tag, kappa, arg));
                    }
                }
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() == Some(b'(') {
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        return Ok(Expr::func(f, arg));
                    }
                }
                match self.symbols.get(&name) {
                    Some(s) => Ok(Expr::sym(s)),
                    None => Err(SymError::Undeclared { name, position: start }),
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }
}
