//! Parser for the cost-expression mini-grammar used on the command line and in
//! config files:
//!
//! ```text
//! cost    := guarded | poly
//! guarded := ("min" | "max") "(" poly "," NUMBER ")"
//! poly    := term ("+" term)*
//! term    := [NUMBER "*"] "b^" NUMBER
//! ```
//!
//! Whitespace between tokens is ignored. A missing coefficient means 1.

use thiserror::Error;

use super::{BaseCost, CapMode, CostError, CostFn, GuardedCost, MonomialCost, PolynomialCost, Term};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cost expression error at column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

pub fn parse_cost(input: &str) -> Result<CostFn, ParseError> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
    };
    let cost = p.cost()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(cost)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            column: self.pos + 1,
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

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{token}'")))
        }
    }

    fn cost(&mut self) -> Result<CostFn, ParseError> {
        let mode = if self.eat("min") {
            Some(CapMode::Above)
        } else if self.eat("max") {
            Some(CapMode::Below)
        } else {
            None
        };
        let Some(mode) = mode else {
            let terms = self.poly()?;
            return self.build_base(terms).map(|base| match base {
                BaseCost::Monomial(m) => CostFn::Monomial(m),
                BaseCost::Polynomial(p) => CostFn::Polynomial(p),
            });
        };
        self.expect("(")?;
        let terms = self.poly()?;
        self.expect(",")?;
        let cap_at = self.pos;
        let cap = self.number()?;
        self.expect(")")?;
        let inner = self.build_base(terms)?;
        GuardedCost::new(inner, cap, mode)
            .map(CostFn::Guarded)
            .map_err(|e| self.wrap(cap_at, e))
    }

    fn build_base(&self, terms: Vec<Term>) -> Result<BaseCost, ParseError> {
        if let [t] = terms[..] {
            if t.coefficient > 0.0 {
                return MonomialCost::new(t.coefficient, t.exponent)
                    .map(BaseCost::Monomial)
                    .map_err(|e| self.wrap(0, e));
            }
        }
        PolynomialCost::new(terms)
            .map(BaseCost::Polynomial)
            .map_err(|e| self.wrap(0, e))
    }

    fn wrap(&self, at: usize, e: CostError) -> ParseError {
        ParseError {
            column: at + 1,
            message: e.to_string(),
        }
    }

    fn poly(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut terms = vec![self.term()?];
        while self.eat("+") {
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let coefficient = match self.peek() {
            Some(b'b') => 1.0,
            Some(_) => {
                let c = self.number()?;
                self.expect("*")?;
                c
            }
            None => return Err(self.error("expected a term, found end of input")),
        };
        self.expect("b")?;
        self.expect("^")?;
        let exponent = self.number()?;
        Ok(Term { coefficient, exponent })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        if i < s.len() && s[i] == b'-' {
            i += 1;
        }
        let digits_start = i;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if !s[digits_start..i].iter().any(u8::is_ascii_digit) {
            return Err(self.error("expected a decimal number"));
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && s[j] == b'-' {
                j += 1;
            }
            let exp_digits = j;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_digits {
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("invalid number '{text}'")))?;
        if !value.is_finite() {
            return Err(self.error(format!("number '{text}' is not finite")));
        }
        self.pos = i;
        Ok(value)
    }
}
