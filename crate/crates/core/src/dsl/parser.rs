//! Recursive-descent parser.
//!
//! ```text
//! expr := seq
//! seq  := ten (">>" ten)*
//! ten  := post ("*" post)*
//! post := atom ("'")*
//! atom := "id(" nat ")" | "discard(" nat ")" | "prepare(" nat ")"
//!       | "double(" name ")" | "scale(" real "," expr ")" | name | "(" expr ")"
//! ```
//!
//! Keywords are only keywords when directly followed by `(`; otherwise they
//! read as binding names.

use std::fmt;

use super::ast::{Expr, ExprKind, Span};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: expected ", self.span)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Then,
    Star,
    Quote,
    Ident(String),
    Number(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Then => "`>>`".into(),
            Tok::Star => "`*`".into(),
            Tok::Quote => "`'`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: (usize, usize, usize)) -> Span {
        Span {
            start: start.0,
            end: self.pos,
            line: start.1,
            column: start.2,
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.peek_char().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let start = (self.pos, self.line, self.column);
            let Some(c) = self.bump() else {
                out.push((Tok::Eof, self.span_from(start)));
                return Ok(out);
            };
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '*' => Tok::Star,
                '\'' => Tok::Quote,
                '>' if self.peek_char() == Some('>') => {
                    self.bump();
                    Tok::Then
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    while self.peek_char().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    Tok::Ident(self.src[start.0..self.pos].to_string())
                }
                c if c.is_ascii_digit() || c == '.' => {
                    self.lex_number();
                    Tok::Number(self.src[start.0..self.pos].to_string())
                }
                other => {
                    return Err(ParseError {
                        span: self.span_from(start),
                        expected: vec!["an expression or operator".into()],
                        found: format!("character `{other}`"),
                    })
                }
            };
            out.push((tok, self.span_from(start)));
        }
    }

    fn lex_number(&mut self) {
        while self.peek_char().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.bump();
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let rest = &self.src[self.pos + 1..];
            let digits_follow = rest.starts_with(|c: char| c.is_ascii_digit())
                || (rest.starts_with(['+', '-']) && rest[1..].starts_with(|c: char| c.is_ascii_digit()));
            if digits_follow {
                self.bump();
                if matches!(self.peek_char(), Some('+' | '-')) {
                    self.bump();
                }
                while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

const KEYWORDS: [&str; 5] = ["id", "discard", "prepare", "double", "scale"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            Err(self.error(&[label]))
        }
    }

    fn join(a: Span, b: Span) -> Span {
        Span { end: b.end, ..a }
    }

    fn seq(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.ten()?;
        while *self.peek() == Tok::Then {
            self.advance();
            let rhs = self.ten()?;
            let span = Self::join(lhs.span, rhs.span);
            lhs = Expr {
                kind: ExprKind::Seq(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn ten(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.post()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.post()?;
            let span = Self::join(lhs.span, rhs.span);
            lhs = Expr {
                kind: ExprKind::Tensor(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn post(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Quote {
            let (_, q) = self.advance();
            let span = Self::join(e.span, q);
            e = Expr {
                kind: ExprKind::Dagger(Box::new(e)),
                span,
            };
        }
        Ok(e)
    }

    fn nat(&mut self) -> Result<usize, ParseError> {
        if let Tok::Number(s) = self.peek() {
            if let Ok(n) = s.parse::<usize>() {
                self.advance();
                return Ok(n);
            }
        }
        Err(self.error(&["a natural number"]))
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        if let Tok::Number(s) = self.peek() {
            if let Ok(x) = s.parse::<f64>() {
                if x.is_finite() {
                    self.advance();
                    return Ok(x);
                }
            }
        }
        Err(self.error(&["a non-negative real number"]))
    }

    fn name(&mut self) -> Result<String, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            self.advance();
            Ok(s)
        } else {
            Err(self.error(&["a name"]))
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let inner = self.seq()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Expr {
                    kind: inner.kind,
                    span: Self::join(start, close),
                })
            }
            Tok::Ident(word) if KEYWORDS.contains(&word.as_str()) && *self.peek_at(1) == Tok::LParen => {
                self.advance();
                self.advance();
                let kind = match word.as_str() {
                    "id" => ExprKind::Id(self.nat()?),
                    "discard" => ExprKind::Discard(self.nat()?),
                    "prepare" => ExprKind::Prepare(self.nat()?),
                    "double" => ExprKind::Double(self.name()?),
                    _ => {
                        let c = self.real()?;
                        self.expect(Tok::Comma, "`,`")?;
                        let child = self.seq()?;
                        ExprKind::Scale(c, Box::new(child))
                    }
                };
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Expr {
                    kind,
                    span: Self::join(start, close),
                })
            }
            Tok::Ident(word) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Ref(word),
                    span: start,
                })
            }
            _ => Err(self.error(&[
                "`id(`",
                "`discard(`",
                "`prepare(`",
                "`double(`",
                "`scale(`",
                "a name",
                "`(`",
            ])),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::new(src).tokenize()?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.seq()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`>>`", "`*`", "`'`", "end of input"]));
    }
    Ok(e)
}
