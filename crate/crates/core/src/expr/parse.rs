//! Recursive-descent parser for the infix grammar documented in `docs/grammar.md`.

use super::{BinOp, Expr, UnaryFn};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("variable x{index} at byte {pos} exceeds dimension {dim}")]
    VarOutOfRange { pos: usize, index: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                i = lx.number(i)?;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((start, Tok::Ident(src[start..i].to_string())));
            } else if "+-*/^".contains(c) {
                lx.toks.push((i, Tok::Op(c)));
                i += 1;
            } else if c == '(' {
                lx.toks.push((i, Tok::LParen));
                i += 1;
            } else if c == ')' {
                lx.toks.push((i, Tok::RParen));
                i += 1;
            } else {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
            }
        }
        lx.toks.push((src.len(), Tok::End));
        Ok(lx.toks)
    }

    fn number(&mut self, start: usize) -> Result<usize, ParseError> {
        let b = self.src.as_bytes();
        let mut i = start;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let v: f64 =
            text.parse().map_err(|_| ParseError::Syntax { pos: start, msg: format!("malformed number `{text}`") })?;
        self.toks.push((start, Tok::Num(v)));
        Ok(i)
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dim: Option<usize>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            // A negated bare literal is a negative constant; anything else is scaled by -1.
            let literal = matches!(self.peek(), Tok::Num(_));
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(v) if literal => Expr::Const(-v),
                other => Expr::mul(Expr::Const(-1.0), other),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(pos, name),
            Tok::End => Err(ParseError::Syntax { pos, msg: "unexpected end of input".into() }),
            t => Err(ParseError::Syntax { pos, msg: format!("unexpected token {t:?}") }),
        }
    }

    fn ident(&mut self, pos: usize, name: String) -> Result<Expr, ParseError> {
        if let Some(f) = UnaryFn::from_name(&name) {
            if *self.peek() != Tok::LParen {
                return self.fail(format!("expected `(` after `{name}`"));
            }
            self.bump();
            let arg = self.expr()?;
            self.expect_rparen()?;
            return Ok(Expr::unary(f, arg));
        }
        let indexed = |prefix: char| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            rest.parse().ok()
        };
        if let Some(i) = indexed('x') {
            if let Some(d) = self.dim {
                if i >= d {
                    return Err(ParseError::VarOutOfRange { pos, index: i, dim: d });
                }
            }
            return Ok(Expr::Var(i));
        }
        if let Some(k) = indexed('c') {
            return Ok(Expr::SymConst(k));
        }
        if let Some(k) = indexed('p') {
            return Ok(Expr::ExpSlot(k));
        }
        Err(ParseError::UnknownSymbol { pos, name })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            _ => self.fail("expected `)`"),
        }
    }
}

/// Parse an infix expression without a dimension check.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_inner(text, None)
}

/// Parse and reject variables with index `>= dim`.
pub fn parse_with_dim(text: &str, dim: usize) -> Result<Expr, ParseError> {
    parse_inner(text, Some(dim))
}

fn parse_inner(text: &str, dim: Option<usize>) -> Result<Expr, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, at: 0, dim };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(e)
}
