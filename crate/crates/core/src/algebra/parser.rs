//! Textual expression syntax.
//!
//! `(+)` exclusive sum, `(+^)` free sum, `(x)` exclusive product,
//! `(x^)` free product, `;` concatenation, `0` the zero process.
//! Weights are complex literals attached with `*`: `0.5*P1`, `2i*P2`,
//! `1-0.5i*P3`. Primitive names come from a declaration table.
//!
//! Normal forms render back to this syntax and re-parse to the same tree.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::{scale, PrimitiveSpec, ProcessExpr, ProductMode, SumMode, ONE};
use crate::error::{Error, Result};

pub type PrimitiveTable = BTreeMap<String, Arc<PrimitiveSpec>>;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    NumberIm(f64),
    SumExcl,
    SumFree,
    ProdExcl,
    ProdFree,
    LParen,
    RParen,
    Star,
    Semi,
    Plus,
    Minus,
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                let rest = &text[i..];
                if rest.starts_with("(+^)") {
                    tokens.push((i, Token::SumFree));
                    i += 4;
                } else if rest.starts_with("(+)") {
                    tokens.push((i, Token::SumExcl));
                    i += 3;
                } else if rest.starts_with("(x^)") {
                    tokens.push((i, Token::ProdFree));
                    i += 4;
                } else if rest.starts_with("(x)") {
                    tokens.push((i, Token::ProdExcl));
                    i += 3;
                } else {
                    tokens.push((i, Token::LParen));
                    i += 1;
                }
            }
            ')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            '*' => {
                tokens.push((i, Token::Star));
                i += 1;
            }
            ';' => {
                tokens.push((i, Token::Semi));
                i += 1;
            }
            '+' => {
                tokens.push((i, Token::Plus));
                i += 1;
            }
            '-' => {
                tokens.push((i, Token::Minus));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // Exponent part.
                if i < bytes.len()
                    && matches!(bytes[i] as char, 'e' | 'E')
                    && i + 1 < bytes.len()
                    && matches!(bytes[i + 1] as char, '0'..='9' | '+' | '-')
                {
                    i += 2;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                let value: f64 = text[start..i].parse().map_err(|_| Error::Expr {
                    pos: start,
                    message: format!("malformed number {:?}", &text[start..i]),
                })?;
                // A trailing lone `i` marks an imaginary literal.
                let imaginary = i < bytes.len()
                    && bytes[i] as char == 'i'
                    && !(i + 1 < bytes.len()
                        && matches!(bytes[i + 1] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_'));
                if imaginary {
                    i += 1;
                    tokens.push((start, Token::NumberIm(value)));
                } else {
                    tokens.push((start, Token::Number(value)));
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(Error::Expr { pos: i, message: format!("unexpected character {other:?}") })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    table: &'a PrimitiveTable,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            got => Err(Error::Expr { pos, message: format!("expected {want:?}, got {got:?}") }),
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expr { pos: self.here(), message: message.into() })
    }

    // concat := sums (';' sums)*
    fn parse_concat(&mut self) -> Result<ProcessExpr> {
        let first = self.parse_sums()?;
        if self.peek() != Some(&Token::Semi) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.peek() == Some(&Token::Semi) {
            self.bump();
            items.push(self.parse_sums()?);
        }
        Ok(ProcessExpr::Concat(items))
    }

    // sums := sumterm ((SumExcl|SumFree) sumterm)*, left-assoc, mode switches nest.
    fn parse_sums(&mut self) -> Result<ProcessExpr> {
        let (w0, e0) = self.parse_sumterm()?;
        let mut mode: Option<SumMode> = None;
        let mut terms: Vec<(Complex64, ProcessExpr)> = vec![(w0, e0)];
        loop {
            let next_mode = match self.peek() {
                Some(Token::SumExcl) => SumMode::Exclusive,
                Some(Token::SumFree) => SumMode::Free,
                _ => break,
            };
            self.bump();
            let term = self.parse_sumterm()?;
            match mode {
                None => {
                    mode = Some(next_mode);
                    terms.push(term);
                }
                Some(m) if m == next_mode => terms.push(term),
                Some(m) => {
                    // Mode switch: fold what we have into a single operand.
                    let folded = ProcessExpr::Sum(m, terms);
                    terms = vec![(ONE, folded), term];
                    mode = Some(next_mode);
                }
            }
        }
        match mode {
            Some(m) => Ok(ProcessExpr::Sum(m, terms)),
            None => {
                let (w, e) = terms.pop().unwrap();
                if w == ONE {
                    Ok(e)
                } else {
                    Ok(scale(w, &e))
                }
            }
        }
    }

    // sumterm := [weight '*'] prods
    fn parse_sumterm(&mut self) -> Result<(Complex64, ProcessExpr)> {
        if let Some(w) = self.try_parse_weight()? {
            self.expect(Token::Star)?;
            let e = self.parse_prods()?;
            Ok((w, e))
        } else {
            Ok((ONE, self.parse_prods()?))
        }
    }

    /// A weight is present when the upcoming tokens are a numeric literal
    /// followed by `*` (possibly a signed or compound complex literal).
    fn try_parse_weight(&mut self) -> Result<Option<Complex64>> {
        let start = self.pos;
        let mut sign = 1.0;
        let mut idx = self.pos;
        match self.tokens.get(idx).map(|(_, t)| t) {
            Some(Token::Plus) => idx += 1,
            Some(Token::Minus) => {
                sign = -1.0;
                idx += 1;
            }
            _ => {}
        }
        let first = match self.tokens.get(idx).map(|(_, t)| t) {
            Some(Token::Number(v)) => (false, *v),
            Some(Token::NumberIm(v)) => (true, *v),
            _ => return Ok(None),
        };
        idx += 1;
        let mut w = if first.0 {
            Complex64::new(0.0, sign * first.1)
        } else {
            Complex64::new(sign * first.1, 0.0)
        };
        // Optional `+ im` / `- im` tail for a real head.
        if !first.0 {
            if let (Some(op), Some(Token::NumberIm(v))) = (
                self.tokens.get(idx).map(|(_, t)| t.clone()),
                self.tokens.get(idx + 1).map(|(_, t)| t),
            ) {
                match op {
                    Token::Plus => {
                        w.im = *v;
                        idx += 2;
                    }
                    Token::Minus => {
                        w.im = -v;
                        idx += 2;
                    }
                    _ => {}
                }
            }
        }
        // Only a weight if `*` follows; `0` alone is the zero process atom.
        if self.tokens.get(idx).map(|(_, t)| t) == Some(&Token::Star) {
            self.pos = idx;
            Ok(Some(w))
        } else {
            self.pos = start;
            Ok(None)
        }
    }

    // prods := factor ((ProdExcl|ProdFree) factor)*
    fn parse_prods(&mut self) -> Result<ProcessExpr> {
        let first = self.parse_factor()?;
        let mut mode: Option<ProductMode> = None;
        let mut factors = vec![first];
        loop {
            let next_mode = match self.peek() {
                Some(Token::ProdExcl) => ProductMode::Exclusive,
                Some(Token::ProdFree) => ProductMode::Free,
                _ => break,
            };
            self.bump();
            let f = self.parse_factor()?;
            match mode {
                None => {
                    mode = Some(next_mode);
                    factors.push(f);
                }
                Some(m) if m == next_mode => factors.push(f),
                Some(m) => {
                    let folded = ProcessExpr::Product(m, factors);
                    factors = vec![folded, f];
                    mode = Some(next_mode);
                }
            }
        }
        match mode {
            Some(m) => Ok(ProcessExpr::Product(m, factors)),
            None => Ok(factors.pop().unwrap()),
        }
    }

    // factor := [weight '*'] atom
    fn parse_factor(&mut self) -> Result<ProcessExpr> {
        if let Some(w) = self.try_parse_weight()? {
            self.expect(Token::Star)?;
            let atom = self.parse_atom()?;
            Ok(scale(w, &atom))
        } else {
            self.parse_atom()
        }
    }

    fn parse_atom(&mut self) -> Result<ProcessExpr> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Number(v)) => {
                if v == 0.0 {
                    Ok(ProcessExpr::Zero)
                } else {
                    Err(Error::Expr { pos, message: format!("bare number {v} is not a process") })
                }
            }
            Some(Token::Ident(name)) => match self.table.get(&name) {
                Some(spec) => Ok(ProcessExpr::Primitive(spec.clone())),
                None => Err(Error::Expr { pos, message: format!("unknown primitive {name:?}") }),
            },
            Some(Token::LParen) => {
                let inner = self.parse_concat()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            got => Err(Error::Expr { pos, message: format!("expected a process, got {got:?}") }),
        }
    }

}

/// Parses an expression against a table of declared primitives.
pub fn parse_expr(text: &str, table: &PrimitiveTable) -> Result<ProcessExpr> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, table, len: text.len() };
    let expr = parser.parse_concat()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("trailing input after expression");
    }
    Ok(expr)
}
