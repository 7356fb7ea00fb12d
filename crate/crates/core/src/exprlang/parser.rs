use std::fmt;

use thiserror::Error;

use super::{BinOp, Constant, Expr, Func, DEFAULT_HS_TERMS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    Arity,
    VariableOutOfRange,
}

/// Parse diagnostic with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// Tokens that would have been accepted at this position (syntax errors only).
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                // exponent only if followed by digits (optionally signed)
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let value = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError {
                    kind: ParseErrorKind::Syntax,
                    line: start_line,
                    column: start_col,
                    message: format!("malformed number `{text}`"),
                    expected: vec![],
                })?;
            out.push(Spanned {
                tok: Tok::Num(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - begin;
            out.push(Spanned {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        return Err(ParseError {
            kind: ParseErrorKind::Syntax,
            line: start_line,
            column: start_col,
            message: format!("unexpected character `{c}`"),
            expected: vec![],
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    dim: usize,
    params: usize,
}

const OPERAND_START: &[&str] = &["number", "identifier", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(
        &self,
        at: &Spanned,
        kind: ParseErrorKind,
        message: String,
        expected: &[&str],
    ) -> ParseError {
        ParseError {
            kind,
            line: at.line,
            column: at.column,
            message,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let at = self.peek().clone();
        self.error_at(
            &at,
            ParseErrorKind::Syntax,
            format!("unexpected {}", at.tok.describe()),
            expected,
        )
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.peek().clone();
        match at.tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(&at, &name)
            }
            _ => Err(self.unexpected(OPERAND_START)),
        }
    }

    fn identifier(&mut self, at: &Spanned, name: &str) -> Result<Expr, ParseError> {
        match name {
            "pi" => return Ok(Expr::Const(Constant::Pi)),
            "e" => return Ok(Expr::Const(Constant::E)),
            _ => {}
        }
        if let Some(idx) = indexed(name, 't') {
            if idx == 0 || idx > self.dim {
                return Err(self.error_at(
                    at,
                    ParseErrorKind::VariableOutOfRange,
                    format!("variable `{name}` out of range (dimension {})", self.dim),
                    &[],
                ));
            }
            return Ok(Expr::Var(idx - 1));
        }
        if let Some(idx) = indexed(name, 'x') {
            if idx == 0 || idx > self.params {
                return Err(self.error_at(
                    at,
                    ParseErrorKind::VariableOutOfRange,
                    format!(
                        "parameter `{name}` out of range ({} parameters)",
                        self.params
                    ),
                    &[],
                ));
            }
            return Ok(Expr::Param(idx - 1));
        }
        if name == "hs" {
            return self.hs_call(at);
        }
        let func = Func::from_name(name).ok_or_else(|| {
            self.error_at(
                at,
                ParseErrorKind::UnknownIdentifier,
                format!("unknown identifier `{name}`"),
                &[],
            )
        })?;
        let args = self.call_args()?;
        if args.len() != func.arity() {
            return Err(self.error_at(
                at,
                ParseErrorKind::Arity,
                format!(
                    "`{name}` takes {} argument(s), got {}",
                    func.arity(),
                    args.len()
                ),
                &[],
            ));
        }
        Ok(Expr::Call(func, args))
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        loop {
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                    args.push(self.expr()?);
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected(&["`,`", "`)`"])),
            }
        }
    }

    fn hs_call(&mut self, at: &Spanned) -> Result<Expr, ParseError> {
        let args = self.call_args()?;
        let terms = match args.as_slice() {
            [_] => DEFAULT_HS_TERMS,
            [_, Expr::Num(n)] if *n >= 1.0 && n.fract() == 0.0 && *n <= u32::MAX as f64 => {
                *n as u32
            }
            [_, _] => {
                return Err(self.error_at(
                    at,
                    ParseErrorKind::Arity,
                    "`hs` truncation must be an integer literal >= 1".into(),
                    &[],
                ))
            }
            _ => {
                return Err(self.error_at(
                    at,
                    ParseErrorKind::Arity,
                    format!("`hs` takes 1 or 2 arguments, got {}", args.len()),
                    &[],
                ))
            }
        };
        let arg = args.into_iter().next().expect("checked above");
        Ok(Expr::Hs(Box::new(arg), terms))
    }
}

fn indexed(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Parses `source` as an expression over `t1..t{dim}` and `x1..x{params}`.
pub fn parse(source: &str, dim: usize, params: usize) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        dim,
        params,
    };
    if p.peek().tok == Tok::End {
        return Err(p.unexpected(OPERAND_START));
    }
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(e)
}
