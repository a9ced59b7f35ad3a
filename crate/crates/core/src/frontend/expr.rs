//! Arithmetic expressions in the chart coordinate `t`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'pi' | 't' | func '(' sum ')' | '(' sum ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```

use std::fmt;

use thiserror::Error;

use crate::jets::Jet;

/// Byte range `[start, end)` in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        match s {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

/// Expression tree. Spans are carried for error reporting and ignored by
/// equality.
#[derive(Clone, Debug)]
pub enum Expr {
    Num(f64, Span),
    Pi(Span),
    Var(Span),
    Neg(Box<Expr>, Span),
    Binary(BinOp, Box<Expr>, Box<Expr>, Span),
    Call(Func, Box<Expr>, Span),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use Expr::*;
        match (self, other) {
            (Num(a, _), Num(b, _)) => a == b,
            (Pi(_), Pi(_)) | (Var(_), Var(_)) => true,
            (Neg(a, _), Neg(b, _)) => a == b,
            (Binary(o1, l1, r1, _), Binary(o2, l2, r2, _)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Call(f1, a1, _), Call(f2, a2, _)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Num(_, s)
            | Expr::Pi(s)
            | Expr::Var(s)
            | Expr::Neg(_, s)
            | Expr::Binary(_, _, _, s)
            | Expr::Call(_, _, s) => *s,
        }
    }

    /// Evaluates at `t` with the seed jet `(t, [1])`.
    pub fn eval(&self, t: f64) -> Result<Jet, EvalError> {
        self.eval_jet(&Jet::variable(t, 1, 0))
    }

    /// Evaluates with `t` bound to an arbitrary jet.
    pub fn eval_jet(&self, t: &Jet) -> Result<Jet, EvalError> {
        let out = match self {
            Expr::Num(v, _) => Jet::constant(*v, t.dim()),
            Expr::Pi(_) => Jet::constant(std::f64::consts::PI, t.dim()),
            Expr::Var(_) => t.clone(),
            Expr::Neg(a, _) => -a.eval_jet(t)?,
            Expr::Call(f, a, _) => {
                let x = a.eval_jet(t)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
            Expr::Binary(op, l, r, span) => {
                let a = l.eval_jet(t)?;
                let b = r.eval_jet(t)?;
                match op {
                    BinOp::Add => &a + &b,
                    BinOp::Sub => &a - &b,
                    BinOp::Mul => &a * &b,
                    BinOp::Div => {
                        if b.value == 0.0 {
                            return Err(EvalError::new(r.span(), "division by zero"));
                        }
                        &a / &b
                    }
                    BinOp::Pow => {
                        if b.value.fract() != 0.0 || b.grad.iter().any(|g| *g != 0.0) || b.value.abs() > i32::MAX as f64 {
                            return Err(EvalError::new(r.span(), "exponent must be a constant integer"));
                        }
                        let n = b.value as i32;
                        if n < 0 && a.value == 0.0 {
                            return Err(EvalError::new(*span, "zero raised to a negative power"));
                        }
                        a.powi(n)
                    }
                }
            }
        };
        if !out.is_finite() {
            return Err(EvalError::new(self.span(), "non-finite result"));
        }
        Ok(out)
    }
}

/// Fully parenthesized form; parsing it yields an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v, _) => write!(f, "{v:?}"),
            Expr::Pi(_) => f.write_str("pi"),
            Expr::Var(_) => f.write_str("t"),
            Expr::Neg(a, _) => write!(f, "(-{a})"),
            Expr::Binary(op, l, r, _) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, a, _) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{reason} in bytes {}..{}", span.start, span.end)]
pub struct EvalError {
    pub span: Span,
    pub reason: &'static str,
}

impl EvalError {
    fn new(span: Span, reason: &'static str) -> Self {
        EvalError { span, reason }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

const OPERAND: [&str; 5] = ["number", "`pi`", "`t`", "function call", "`(`"];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Num(v),
                _ => {
                    return Err(ParseError {
                        offset: start,
                        expected: vec!["number"],
                        found: format!("`{text}`"),
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or('?');
                    return Err(ParseError {
                        offset: start,
                        expected: OPERAND.to_vec(),
                        found: format!("`{ch}`"),
                    });
                }
            }
        };
        out.push((tok, Span { start, end: i }));
    }
    out.push((Tok::End, Span { start: src.len(), end: src.len() }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Span) {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        let (tok, span) = self.peek();
        ParseError {
            offset: span.start,
            expected,
            found: tok.to_string(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().0 {
            self.bump();
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            let span = lhs.span().join(rhs.span());
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().0 {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            let span = lhs.span().join(rhs.span());
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek().0 {
            let (_, span) = self.bump();
            let inner = self.unary()?;
            let span = span.join(inner.span());
            return Ok(Expr::Neg(Box::new(inner), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek().0 {
            self.bump();
            let exp = self.unary()?;
            let span = base.span().join(exp.span());
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp), span));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, span) = self.peek().clone();
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v, span))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => {
                    self.bump();
                    Ok(Expr::Pi(span))
                }
                "t" => {
                    self.bump();
                    Ok(Expr::Var(span))
                }
                other => match Func::from_name(other) {
                    Some(f) => {
                        self.bump();
                        if self.peek().0 != Tok::LParen {
                            return Err(self.error(vec!["`(`"]));
                        }
                        self.bump();
                        let arg = self.sum()?;
                        let close = self.expect_close()?;
                        Ok(Expr::Call(f, Box::new(arg), span.join(close)))
                    }
                    None => Err(self.error(OPERAND.to_vec())),
                },
            },
            _ => Err(self.error(OPERAND.to_vec())),
        }
    }

    fn expect_close(&mut self) -> Result<Span, ParseError> {
        if self.peek().0 == Tok::RParen {
            Ok(self.bump().1)
        } else {
            Err(self.error(vec!["operator", "`)`"]))
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.sum()?;
    if p.peek().0 != Tok::End {
        return Err(p.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

pub fn eval_expr(e: &Expr, t: f64) -> Result<Jet, EvalError> {
    e.eval(t)
}
