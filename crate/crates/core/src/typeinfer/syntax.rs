//! Concrete syntax of the source language.
//!
//! ```text
//! expr ::= \x. expr | \(x : type). expr | expr expr | n | x | (expr)
//! type ::= forall a b. type | type -> type | Con type* | a | (type)
//! ```
//!
//! Application is left-associative and `->` is right-associative. A lambda
//! extends as far to the right as possible and may appear as the last
//! argument of an application. Type constructors start with an uppercase
//! letter, type variables with a lowercase one.

use std::fmt;

use thiserror::Error;

use super::{Expr, SurfaceType};

const MAX_NESTING: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct SourceError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Backslash,
    Dot,
    Colon,
    Arrow,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Backslash => f.write_str("`\\`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, SourceError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        let tok = match c {
            '\\' | 'λ' => Tok::Backslash,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance(2, &mut i);
                out.push(Lexed { tok: Tok::Arrow, line: tl, col: tc });
                continue;
            }
            '→' => Tok::Arrow,
            '∀' => Tok::Ident("forall".into()),
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i);
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits.parse().map_err(|_| SourceError {
                    line: tl,
                    col: tc,
                    msg: format!("integer literal {digits} out of range"),
                })?;
                out.push(Lexed { tok: Tok::Int(n), line: tl, col: tc });
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    advance(1, &mut i);
                }
                out.push(Lexed { tok: Tok::Ident(chars[start..i].iter().collect()), line: tl, col: tc });
                continue;
            }
            other => return Err(SourceError { line: tl, col: tc, msg: format!("unexpected character {other:?}") }),
        };
        advance(1, &mut i);
        out.push(Lexed { tok, line: tl, col: tc });
    }
    out.push(Lexed { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_constructor(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, SourceError> {
        Ok(Parser { toks: lex(src)?, pos: 0, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, msg: impl Into<String>) -> SourceError {
        let t = &self.toks[self.pos];
        SourceError { line: t.line, col: t.col, msg: msg.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), SourceError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn enter(&mut self) -> Result<(), SourceError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            Err(self.error("nesting too deep"))
        } else {
            Ok(())
        }
    }

    fn variable(&mut self) -> Result<String, SourceError> {
        match self.peek().clone() {
            Tok::Ident(s) if s != "forall" && !is_constructor(&s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected a variable, found {other}"))),
        }
    }

    fn finish(&self) -> Result<(), SourceError> {
        match self.peek() {
            Tok::Eof => Ok(()),
            other => Err(self.error(format!("unexpected {other}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, SourceError> {
        self.enter()?;
        let e = if *self.peek() == Tok::Backslash { self.lambda()? } else { self.application()? };
        self.depth -= 1;
        Ok(e)
    }

    fn lambda(&mut self) -> Result<Expr, SourceError> {
        self.expect(Tok::Backslash)?;
        let (x, ann) = if *self.peek() == Tok::LParen {
            self.bump();
            let x = self.variable()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::RParen)?;
            (x, Some(ty))
        } else {
            (self.variable()?, None)
        };
        self.expect(Tok::Dot)?;
        let body = Box::new(self.expr()?);
        Ok(match ann {
            Some(ann) => Expr::AnnLam(x, ann, body),
            None => Expr::Lam(x, body),
        })
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Int(_) | Tok::LParen)
    }

    fn application(&mut self) -> Result<Expr, SourceError> {
        let mut e = self.atom()?;
        loop {
            if self.starts_atom() {
                let a = self.atom()?;
                e = Expr::App(Box::new(e), Box::new(a));
            } else if *self.peek() == Tok::Backslash {
                let a = self.expr()?;
                return Ok(Expr::App(Box::new(e), Box::new(a)));
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, SourceError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::IntLit(n))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.variable()?)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.error(format!("expected an expression, found {other}"))),
        }
    }

    fn ty(&mut self) -> Result<SurfaceType, SourceError> {
        self.enter()?;
        let t = if matches!(self.peek(), Tok::Ident(s) if s == "forall") {
            self.bump();
            let mut vars = vec![self.variable()?];
            while matches!(self.peek(), Tok::Ident(_)) {
                vars.push(self.variable()?);
            }
            self.expect(Tok::Dot)?;
            let body = self.ty()?;
            vars.into_iter().rev().fold(body, |b, v| SurfaceType::Forall(v, Box::new(b)))
        } else {
            let dom = self.constructed()?;
            if *self.peek() == Tok::Arrow {
                self.bump();
                SurfaceType::Fun(Box::new(dom), Box::new(self.ty()?))
            } else {
                dom
            }
        };
        self.depth -= 1;
        Ok(t)
    }

    fn constructed(&mut self) -> Result<SurfaceType, SourceError> {
        match self.peek().clone() {
            Tok::Ident(c) if is_constructor(&c) => {
                self.bump();
                let mut args = Vec::new();
                while matches!(self.peek(), Tok::Ident(s) if s != "forall") || *self.peek() == Tok::LParen {
                    args.push(self.type_atom()?);
                }
                Ok(SurfaceType::Con(c, args))
            }
            _ => self.type_atom(),
        }
    }

    fn type_atom(&mut self) -> Result<SurfaceType, SourceError> {
        match self.peek().clone() {
            Tok::Ident(c) if is_constructor(&c) => {
                self.bump();
                Ok(SurfaceType::Con(c, Vec::new()))
            }
            Tok::Ident(_) => Ok(SurfaceType::Var(self.variable()?)),
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(self.error(format!("expected a type, found {other}"))),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, SourceError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<SurfaceType, SourceError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn con(c: &str) -> SurfaceType {
        SurfaceType::Con(c.into(), vec![])
    }

    #[test]
    fn types() {
        let t = parse_type("forall a. a -> a").unwrap();
        let a = || Box::new(SurfaceType::Var("a".into()));
        assert_eq!(t, SurfaceType::Forall("a".into(), Box::new(SurfaceType::Fun(a(), a()))));
        assert_eq!(parse_type("Maybe Int").unwrap(), SurfaceType::Con("Maybe".into(), vec![con("Int")]));
        let t = parse_type("(forall a. a -> a) -> Int").unwrap();
        assert!(matches!(t, SurfaceType::Fun(ref d, _) if matches!(**d, SurfaceType::Forall(..))));
        let t = parse_type("Int -> Int -> Int").unwrap();
        assert!(matches!(t, SurfaceType::Fun(_, ref c) if matches!(**c, SurfaceType::Fun(..))));
        assert_eq!(parse_type("forall a b. a").unwrap().to_string(), "forall a. forall b. a");
    }

    #[test]
    fn expressions() {
        let e = parse_expr(r"\(f : forall a. a -> a). f 3").unwrap();
        assert!(matches!(e, Expr::AnnLam(ref f, _, ref b) if f == "f" && matches!(**b, Expr::App(..))));
        let e = parse_expr("f x y").unwrap();
        assert_eq!(e.to_string(), "f x y");
        assert!(matches!(e, Expr::App(ref g, _) if matches!(**g, Expr::App(..))));
        assert_eq!(parse_expr(r"f \x. x").unwrap().to_string(), r"f (\x. x)");
    }

    #[test]
    fn round_trip() {
        for src in [r"\x. \y. x", r"(\(g : (Int -> Int) -> Int). g) (\h. h 1)", "id 3", r"const (\x. x) 4"] {
            let e = parse_expr(src).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
        }
        for src in ["forall a. (a -> a) -> List a", "(forall a. a) -> Maybe (Int -> Int)"] {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&t.to_string()).unwrap(), t);
        }
    }

    #[test]
    fn errors() {
        assert!(parse_expr(r"\x x").is_err());
        assert!(parse_expr("f (").is_err());
        assert!(parse_expr("Foo").is_err());
        assert!(parse_type("forall. a").is_err());
        assert!(parse_expr("99999999999999999999999").is_err());
        let deep = "(".repeat(1000) + "x" + &")".repeat(1000);
        assert!(parse_expr(&deep).is_err());
    }
}
