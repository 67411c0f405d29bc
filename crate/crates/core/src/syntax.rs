//! Concrete syntax for terms, rule files (`.chr`) and goal files (`.chg`).
//!
//! ```text
//! rule    ::= name '@' heads ('\' heads)? ('<=>' | '==>') (guard '|')? quant body '.'
//! guard   ::= gatom (',' gatom)*        gatom ::= 'true' | term '==' term | not_<f>(term)
//! quant   ::= ('nabla' VAR+ '.')? ('exists' VAR+ '.')?
//! body    ::= 'true' | item (',' item)*  item  ::= c(term, ...) | term '=' term
//! term    ::= VAR | ?name | #name | f(term, ...) | f | "str" | [term, ...]
//!           | '\' VAR '.' term | '(' term term+ ')' | '(' term ')'
//! ```
//!
//! Identifiers starting with an uppercase letter or `_` are metavariables
//! unless bound by an enclosing `\`. `%` starts a line comment.

use std::collections::BTreeSet;

use crate::rules::{validate, Diagnostic, Guard, GuardAtom, Program, Rule, Signature};
use crate::term::{beta0_normalize, is_well_defined_constraint, Constraint, Name, Term, EQ, TRUE};

const MAX_NESTING: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: `{symbol}` used with {found} argument(s) but declared with {expected}")]
    Arity { line: usize, col: usize, symbol: String, expected: usize, found: usize },
    #[error("{line}:{col}: goal `{goal}` is not well-defined (nominal constant or non-pattern argument)")]
    IllFormedGoal { line: usize, col: usize, goal: String },
    #[error("invalid program:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Nominal(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 15] = ["<=>", "==>", "==", "(", ")", "[", "]", ",", ".", "\\", "@", "|", "=", ":", "->"];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c == '"' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '"' {
                return Err(err(tl, tc, "unterminated string literal".into()));
            }
            let s: String = chars[i + 1..j].iter().collect();
            col += j + 1 - i;
            i = j + 1;
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        }
        if c == '?' || c == '#' {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            if j == i + 1 {
                return Err(err(tl, tc, format!("expected a name after `{c}`")));
            }
            let s: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            let tok = if c == '?' { Tok::Var(s) } else { Tok::Nominal(s) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if is_ident_char(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            let first = s.chars().next().unwrap_or('a');
            let tok = if first.is_uppercase() || first == '_' { Tok::Var(s) } else { Tok::Ident(s) };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line: tl, col: tc });
            }
            None => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    terms: Signature,
    constraints: Signature,
    allow_nominals: bool,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        let mut constraints = Signature::default();
        let _ = constraints.declare(EQ, 2);
        let _ = constraints.declare(TRUE, 0);
        let mut terms = Signature::default();
        let _ = terms.declare("cons", 2);
        let _ = terms.declare("nil", 0);
        Ok(Parser { toks: lex(src)?, pos: 0, depth: 0, terms, constraints, allow_nominals: true })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax { line, col, msg: msg.into() })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) | Tok::Var(s) | Tok::Nominal(s) => format!("`{s}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", Self::describe(self.peek())))
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.error("nesting too deep");
        }
        Ok(())
    }

    fn declare_term(&mut self, name: &str, arity: usize, at: (usize, usize)) -> Result<(), ParseError> {
        self.terms.declare(name, arity).map_err(|expected| ParseError::Arity {
            line: at.0,
            col: at.1,
            symbol: name.into(),
            expected,
            found: arity,
        })
    }

    fn declare_constraint(&mut self, name: &str, arity: usize, at: (usize, usize)) -> Result<(), ParseError> {
        self.constraints.declare(name, arity).map_err(|expected| ParseError::Arity {
            line: at.0,
            col: at.1,
            symbol: name.into(),
            expected,
            found: arity,
        })
    }

    // ---- terms

    /// `scope` holds the names bound by enclosing abstractions, innermost last.
    fn term(&mut self, scope: &mut Vec<String>) -> Result<Term, ParseError> {
        self.enter()?;
        let r = self.term_inner(scope);
        self.depth -= 1;
        r
    }

    fn bound_index(scope: &[String], name: &str) -> Option<usize> {
        scope.iter().rev().position(|b| b == name)
    }

    fn term_inner(&mut self, scope: &mut Vec<String>) -> Result<Term, ParseError> {
        let at = self.here();
        match self.bump() {
            Tok::Var(v) => Ok(match Self::bound_index(scope, &v) {
                Some(i) => Term::Bound(i),
                None => Term::Meta(v.into()),
            }),
            Tok::Nominal(n) => {
                if !self.allow_nominals {
                    return Err(ParseError::Syntax {
                        line: at.0,
                        col: at.1,
                        msg: format!("nominal constant {n} cannot appear in user input"),
                    });
                }
                Ok(Term::Nominal(n.into()))
            }
            Tok::Str(s) => {
                let name = format!("\"{s}\"");
                self.declare_term(&name, 0, at)?;
                Ok(Term::Ctor(name.into(), Vec::new()))
            }
            Tok::Ident(f) => {
                if !self.is_punct("(") {
                    if let Some(i) = Self::bound_index(scope, &f) {
                        return Ok(Term::Bound(i));
                    }
                }
                let args = if self.eat("(") { self.term_args(scope, ")")? } else { Vec::new() };
                self.declare_term(&f, args.len(), at)?;
                Ok(Term::Ctor(f.into(), args))
            }
            Tok::Punct("[") => {
                let items = self.term_args(scope, "]")?;
                Ok(items
                    .into_iter()
                    .rev()
                    .fold(Term::constant("nil"), |tail, x| Term::ctor("cons", vec![x, tail])))
            }
            Tok::Punct("\\") => {
                let binder = match self.bump() {
                    Tok::Var(v) | Tok::Ident(v) => v,
                    other => return self.error(format!("expected a binder name, found {}", Self::describe(&other))),
                };
                self.expect(".")?;
                scope.push(binder.clone());
                let body = self.term(scope);
                scope.pop();
                Ok(Term::Lam(binder.into(), Box::new(body?)))
            }
            Tok::Punct("(") => {
                let mut t = self.term(scope)?;
                while !self.eat(")") {
                    if self.at_eof() {
                        return self.error("unclosed `(`");
                    }
                    let a = self.term(scope)?;
                    t = Term::app(t, a);
                }
                Ok(t)
            }
            other => {
                self.pos -= usize::from(self.pos > 0 && !matches!(other, Tok::Eof));
                self.error(format!("expected a term, found {}", Self::describe(&other)))
            }
        }
    }

    fn term_args(&mut self, scope: &mut Vec<String>, close: &str) -> Result<Vec<Term>, ParseError> {
        let mut args = Vec::new();
        if self.eat(close) {
            return Ok(args);
        }
        loop {
            args.push(self.term(scope)?);
            if self.eat(close) {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    // ---- constraints

    /// A constraint `c(t, ...)` or an equality `t = t`.
    fn constraint(&mut self) -> Result<Constraint, ParseError> {
        let at = self.here();
        let mut scope = Vec::new();
        if let Tok::Ident(name) = self.peek().clone() {
            if name == TRUE && !matches!(self.peek_at(1), Tok::Punct("(") | Tok::Punct("=")) {
                self.bump();
                return Ok(Constraint::truth());
            }
            self.bump();
            let args = if self.eat("(") { self.term_args(&mut scope, ")")? } else { Vec::new() };
            if self.eat("=") {
                self.declare_term(&name, args.len(), at)?;
                let lhs = Term::Ctor(name.into(), args);
                let rhs = self.term(&mut scope)?;
                return Ok(Constraint::eq(lhs, rhs).normalized());
            }
            self.declare_constraint(&name, args.len(), at)?;
            return Ok(Constraint::new(&name, args).normalized());
        }
        let lhs = self.term(&mut scope)?;
        self.expect("=")?;
        let rhs = self.term(&mut scope)?;
        Ok(Constraint::eq(lhs, rhs).normalized())
    }

    fn constraint_list(&mut self) -> Result<Vec<Constraint>, ParseError> {
        let mut out = vec![self.constraint()?];
        while self.eat(",") {
            out.push(self.constraint()?);
        }
        Ok(out)
    }

    fn guard_atom(&mut self) -> Result<GuardAtom, ParseError> {
        let mut scope = Vec::new();
        if let Tok::Ident(name) = self.peek().clone() {
            if name == TRUE && !matches!(self.peek_at(1), Tok::Punct("(") | Tok::Punct("==")) {
                self.bump();
                return Ok(GuardAtom::True);
            }
            if let Some(sym) = name.strip_prefix("not_") {
                if matches!(self.peek_at(1), Tok::Punct("(")) && !sym.is_empty() {
                    self.bump();
                    self.bump();
                    let t = self.term(&mut scope)?;
                    self.expect(")")?;
                    return Ok(GuardAtom::NotHeadedBy(beta0_normalize(&t), sym.into()));
                }
            }
        }
        let l = self.term(&mut scope)?;
        self.expect("==")?;
        let r = self.term(&mut scope)?;
        Ok(GuardAtom::Equal(beta0_normalize(&l), beta0_normalize(&r)))
    }

    fn try_guard(&mut self) -> Option<Guard> {
        let save = (self.pos, self.terms.clone(), self.constraints.clone());
        let attempt = (|| {
            let mut atoms = vec![self.guard_atom()?];
            while self.eat(",") {
                atoms.push(self.guard_atom()?);
            }
            self.expect("|")?;
            Ok::<_, ParseError>(Guard { atoms })
        })();
        match attempt {
            Ok(g) => Some(g),
            Err(_) => {
                self.pos = save.0;
                self.terms = save.1;
                self.constraints = save.2;
                None
            }
        }
    }

    fn binders(&mut self) -> Result<Vec<Name>, ParseError> {
        let mut out = Vec::new();
        while let Tok::Var(v) = self.peek().clone() {
            self.bump();
            out.push(v.into());
        }
        if out.is_empty() {
            return self.error("expected at least one variable after quantifier");
        }
        self.expect(".")?;
        Ok(out)
    }

    fn rule(&mut self, index: usize) -> Result<Rule, ParseError> {
        let name: Name = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(n) | Tok::Var(n), Tok::Punct("@")) => {
                self.bump();
                self.bump();
                n.into()
            }
            _ => format!("rule{index}").into(),
        };
        let first = self.constraint_list()?;
        let (kept, removed) = if self.eat("\\") {
            let removed = self.constraint_list()?;
            self.expect("<=>")?;
            (first, removed)
        } else if self.eat("==>") {
            (first, Vec::new())
        } else if self.eat("<=>") {
            (Vec::new(), first)
        } else {
            return self.error(format!("expected `<=>`, `==>` or `\\`, found {}", Self::describe(self.peek())));
        };
        let guard = self.try_guard().unwrap_or_default();
        let mut nabla_vars = Vec::new();
        let mut exists_vars = Vec::new();
        if matches!(self.peek(), Tok::Ident(k) if k == "nabla") {
            self.bump();
            nabla_vars = self.binders()?;
        }
        if matches!(self.peek(), Tok::Ident(k) if k == "exists") {
            self.bump();
            exists_vars = self.binders()?;
        }
        let body = self.constraint_list()?.into_iter().filter(|c| !c.is_true()).collect();
        self.expect(".")?;
        Ok(Rule { name, kept, removed, guard, nabla_vars, exists_vars, body })
    }
}

/// Parses a single term. Nominal constants are accepted.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term(&mut Vec::new())?;
    if !p.at_eof() {
        return p.error(format!("unexpected {} after term", Parser::describe(p.peek())));
    }
    Ok(beta0_normalize(&t))
}

/// Parses a single constraint such as `leq(X, fn(A, B))` or `X = f(Y)`.
/// Nominal constants are accepted.
pub fn parse_constraint(src: &str) -> Result<Constraint, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.constraint()?;
    p.eat(".");
    if !p.at_eof() {
        return p.error(format!("unexpected {} after constraint", Parser::describe(p.peek())));
    }
    Ok(c)
}

/// Parses a rule file without running [`validate`].
pub fn parse_program_unchecked(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let mut rules = Vec::new();
    while !p.at_eof() {
        let r = p.rule(rules.len())?;
        rules.push(r);
    }
    Ok(Program::new(rules, p.constraints, p.terms))
}

/// Parses and validates a rule file.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let p = parse_program_unchecked(src)?;
    let diags = validate(&p);
    if diags.is_empty() {
        Ok(p)
    } else {
        Err(ParseError::Invalid(diags))
    }
}

/// Parses a goal file: constraints each terminated by `.`. Goals must be
/// well-defined; nominal constants are rejected.
pub fn parse_goals(src: &str) -> Result<Vec<Constraint>, ParseError> {
    parse_goals_with(src, None)
}

/// Like [`parse_goals`], checking arities against a program's signatures.
pub fn parse_goals_for(src: &str, program: &Program) -> Result<Vec<Constraint>, ParseError> {
    parse_goals_with(src, Some(program))
}

fn parse_goals_with(src: &str, program: Option<&Program>) -> Result<Vec<Constraint>, ParseError> {
    let mut p = Parser::new(src)?;
    if let Some(prog) = program {
        p.terms = prog.term_signature.clone();
        p.constraints = prog.constraint_signature.clone();
    }
    p.allow_nominals = false;
    let mut goals = Vec::new();
    while !p.at_eof() {
        let (line, col) = p.here();
        let c = p.constraint()?;
        p.expect(".")?;
        if !is_well_defined_constraint(&c) {
            return Err(ParseError::IllFormedGoal { line, col, goal: c.to_string() });
        }
        goals.push(c);
    }
    Ok(goals)
}

/// Metavariables mentioned anywhere in a list of constraints.
pub fn goal_variables(goals: &[Constraint]) -> BTreeSet<Name> {
    crate::term::free_metavars(goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{classify, DiagnosticKind, RuleKind};

    #[test]
    fn terms() {
        let t = parse_term("forall(\\A. fn(A, A))").unwrap();
        assert_eq!(t, Term::ctor("forall", vec![Term::lam("A", Term::ctor("fn", vec![Term::meta("A"), Term::meta("A")]))]));
        assert_eq!(parse_term("[a, B]").unwrap().to_string(), "[a, B]");
        assert_eq!(parse_term("(Q V)").unwrap(), Term::app(Term::meta("Q"), Term::meta("V")));
        assert_eq!(parse_term("con(\"Int\", [])").unwrap().to_string(), "con(\"Int\", [])");
        assert_eq!(parse_term("#a").unwrap(), Term::nominal("#a"));
        // lowercase binders shadow nullary constructors
        assert_eq!(parse_term("\\x. x").unwrap(), Term::Lam("x".into(), Box::new(Term::Bound(0))));
    }

    #[test]
    fn term_errors_carry_positions() {
        match parse_term("f(a,\n  ]") {
            Err(ParseError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_term("f(a, f)"), Err(ParseError::Arity { .. })));
        assert!(parse_term("(F").is_err());
    }

    #[test]
    fn fig4_inst_rule() {
        let p = parse_program("inst_l @ leq(forall(Q), T2) <=> not_forall(T2) | exists V. leq((Q V), T2).").unwrap();
        let r = &p.rules[0];
        assert_eq!(&*r.name, "inst_l");
        assert_eq!(r.removed, vec![parse_constraint("leq(forall(Q), T2)").unwrap()]);
        assert_eq!(r.guard.atoms, vec![GuardAtom::NotHeadedBy(Term::meta("T2"), "forall".into())]);
        assert_eq!(r.exists_vars, vec![Name::from("V")]);
        assert_eq!(r.body, vec![parse_constraint("leq((Q V), T2)").unwrap()]);
    }

    #[test]
    fn refl_rule_has_empty_body() {
        let p = parse_program("refl @ leq(T, T) <=> true.").unwrap();
        assert!(p.rules[0].body.is_empty());
        assert_eq!(classify(&p.rules[0]), RuleKind::Simplification);
    }

    #[test]
    fn unbound_body_variable_is_rejected() {
        match parse_program("bad @ c(X) <=> d(Y).") {
            Err(ParseError::Invalid(d)) => {
                assert_eq!(d.len(), 1);
                assert_eq!(d[0].kind, DiagnosticKind::UnboundBodyVar("Y".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classification() {
        let p = parse_program(
            "a @ eq_c(int) <=> true.\n\
             b @ ord(A) ==> eq_c(A).\n\
             c @ eq_c(A) \\ eq_c(A) <=> true.",
        )
        .unwrap();
        let kinds: Vec<_> = p.rules.iter().map(classify).collect();
        assert_eq!(kinds, vec![RuleKind::Simplification, RuleKind::Propagation, RuleKind::Simpagation]);
    }

    #[test]
    fn nominals_and_non_patterns_in_heads() {
        let p = parse_program_unchecked("n @ c(#a) <=> true.").unwrap();
        assert_eq!(validate(&p)[0].kind, DiagnosticKind::NominalInHead(parse_constraint("c(#a)").unwrap()));
        let p = parse_program_unchecked("n @ c(\\X. (F (G X))) <=> true.").unwrap();
        assert!(matches!(validate(&p)[0].kind, DiagnosticKind::NonPatternHead(_)));
    }

    #[test]
    fn binder_clash_and_duplicate_names() {
        let p = parse_program_unchecked("r @ c(X) <=> exists X. d(X).\nr @ c(X) <=> true.").unwrap();
        let kinds: Vec<_> = validate(&p).into_iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::QuantifierClash("X".into())));
        assert!(kinds.contains(&DiagnosticKind::DuplicateRuleName));
    }

    #[test]
    fn equalities_in_bodies() {
        let p = parse_program("con_l @ leq(con(C1, Args1), T2) <=> con(C1, Args1) = T2.").unwrap();
        assert!(p.rules[0].body[0].is_eq());
        assert_eq!(p.rules[0].body[0].to_string(), "con(C1, Args1) = T2");
    }

    #[test]
    fn goals() {
        let g = parse_goals("% comment\nord([A]).\nleq(X, Y).\n").unwrap();
        assert_eq!(g.len(), 2);
        assert!(parse_goals("c(#a).").is_err());
        assert!(matches!(parse_goals("c(\\X. (F X X))."), Err(ParseError::IllFormedGoal { .. })));
        // abstraction at constraint level is not a constraint
        assert!(parse_goals("\\X. c(X).").is_err());
    }
}
