//! Constraint-based type inference for a λ-calculus with higher-rank
//! annotations.
//!
//! Types are encoded as terms: `con("C", [args])` for constructor types,
//! `fn(S, T)` for functions and `forall(\A. T)` for polymorphic types. A
//! derivation emits instantiation constraints `leq(T1, T2)` ("T1 is at least
//! as polymorphic as T2"), which the rules of [`hr_rules`] reduce to
//! equations. Function types are invariant.

pub mod syntax;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{run, ExecutionState, RunResult, Strategy};
use crate::rules::Program;
use crate::term::{Constraint, Name, Term};

pub use syntax::{parse_expr, parse_type, SourceError};

pub const DEFAULT_FUEL: usize = 10_000;

const RULES: &str = include_str!("../../programs/higher_rank.chr");

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    App(Box<Expr>, Box<Expr>),
    Lam(String, Box<Expr>),
    AnnLam(String, SurfaceType, Box<Expr>),
    IntLit(i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceType {
    Con(String, Vec<SurfaceType>),
    Fun(Box<SurfaceType>, Box<SurfaceType>),
    Forall(String, Box<SurfaceType>),
    Var(String),
}

impl SurfaceType {
    pub fn int() -> SurfaceType {
        SurfaceType::Con("Int".into(), Vec::new())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(t: &SurfaceType, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match t {
                SurfaceType::Var(a) if !bound.contains(a) => {
                    out.insert(a.clone());
                }
                SurfaceType::Var(_) => {}
                SurfaceType::Con(_, args) => args.iter().for_each(|a| go(a, bound, out)),
                SurfaceType::Fun(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                SurfaceType::Forall(a, b) => {
                    bound.push(a.clone());
                    go(b, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Γ: the types of free term variables.
pub type TypeEnv = BTreeMap<String, SurfaceType>;

/// `id : forall a. a -> a` and `const : forall a b. a -> b -> a`.
pub fn default_env() -> TypeEnv {
    let mut env = TypeEnv::new();
    for (x, t) in [("id", "forall a. a -> a"), ("const", "forall a b. a -> b -> a")] {
        env.insert(x.into(), parse_type(t).expect("built-in type"));
    }
    env
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound type variable `{0}` in annotation")]
    UnboundTypeVariable(String),
    #[error("type mismatch: the constraints have no solution")]
    Mismatch,
    #[error("unsolved constraints: {}", join(.0))]
    Unsolved(Vec<Constraint>),
    #[error("skolem `{skolem}` escapes its scope in {ty}")]
    SkolemEscape { skolem: String, ty: String },
    #[error("solver error: {0}")]
    Engine(String),
    #[error("solver ran out of fuel after {0} steps")]
    OutOfFuel(usize),
}

fn join(cs: &[Constraint]) -> String {
    cs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn type_var_meta(a: &str) -> Name {
    let mut cs = a.chars();
    match cs.next() {
        Some(c) => format!("{}{}", c.to_uppercase(), cs.as_str()).into(),
        None => "A".into(),
    }
}

fn con_name(c: &str) -> Name {
    format!("\"{c}\"").into()
}

fn list(items: Vec<Term>) -> Term {
    items.into_iter().rev().fold(Term::constant("nil"), |tail, x| Term::ctor("cons", vec![x, tail]))
}

/// Encodes a surface type; free type variables become metavariables named by
/// capitalising them.
pub fn encode_type(t: &SurfaceType) -> Term {
    fn go(t: &SurfaceType, bound: &mut Vec<String>) -> Term {
        match t {
            SurfaceType::Var(a) => match bound.iter().rev().position(|b| b == a) {
                Some(i) => Term::Bound(i),
                None => Term::Meta(type_var_meta(a)),
            },
            SurfaceType::Con(c, args) => {
                Term::Ctor("con".into(), vec![Term::Ctor(con_name(c), vec![]), list(args.iter().map(|a| go(a, bound)).collect())])
            }
            SurfaceType::Fun(a, b) => Term::ctor("fn", vec![go(a, bound), go(b, bound)]),
            SurfaceType::Forall(a, b) => {
                bound.push(a.clone());
                let body = go(b, bound);
                bound.pop();
                Term::ctor("forall", vec![Term::Lam(type_var_meta(a), Box::new(body))])
            }
        }
    }
    go(t, &mut Vec::new())
}

fn decode_list(t: &Term) -> Option<Vec<&Term>> {
    let mut out = Vec::new();
    let mut t = t;
    loop {
        match t {
            Term::Ctor(n, xs) if &**n == "nil" && xs.is_empty() => return Some(out),
            Term::Ctor(n, xs) if &**n == "cons" && xs.len() == 2 => {
                out.push(&xs[0]);
                t = &xs[1];
            }
            _ => return None,
        }
    }
}

fn letter_name(k: usize) -> String {
    let c = (b'a' + (k % 26) as u8) as char;
    if k < 26 {
        c.to_string()
    } else {
        format!("{c}{}", k / 26)
    }
}

/// Decodes a type term. Metavariables get surface names `a`, `b`, .. in
/// order of first occurrence, nominal constants keep their `#` name.
/// Returns `None` for terms outside the encoding.
pub fn decode_type(t: &Term) -> Option<SurfaceType> {
    struct Namer {
        metas: BTreeMap<Name, String>,
        used: BTreeSet<String>,
        next: usize,
    }
    impl Namer {
        fn fresh(&mut self) -> String {
            loop {
                let n = letter_name(self.next);
                self.next += 1;
                if self.used.insert(n.clone()) {
                    return n;
                }
            }
        }
    }
    fn go(t: &Term, bound: &mut Vec<String>, nm: &mut Namer) -> Option<SurfaceType> {
        Some(match t {
            Term::Meta(m) => {
                if let Some(n) = nm.metas.get(m) {
                    SurfaceType::Var(n.clone())
                } else {
                    let n = nm.fresh();
                    nm.metas.insert(m.clone(), n.clone());
                    SurfaceType::Var(n)
                }
            }
            Term::Nominal(a) => SurfaceType::Var(a.to_string()),
            Term::Bound(i) => SurfaceType::Var(bound.get(bound.len().checked_sub(i + 1)?)?.clone()),
            Term::Ctor(f, xs) => match (&**f, xs.as_slice()) {
                ("fn", [a, b]) => SurfaceType::Fun(Box::new(go(a, bound, nm)?), Box::new(go(b, bound, nm)?)),
                ("forall", [Term::Lam(_, body)]) => {
                    let v = nm.fresh();
                    bound.push(v.clone());
                    let b = go(body, bound, nm);
                    bound.pop();
                    SurfaceType::Forall(v, Box::new(b?))
                }
                ("con", [Term::Ctor(c, none), args]) if none.is_empty() && c.starts_with('"') => {
                    let name = c.trim_matches('"').to_string();
                    let args = decode_list(args)?.into_iter().map(|a| go(a, bound, nm)).collect::<Option<_>>()?;
                    SurfaceType::Con(name, args)
                }
                _ => return None,
            },
            Term::Lam(..) | Term::App(..) => return None,
        })
    }
    go(t, &mut Vec::new(), &mut Namer { metas: BTreeMap::new(), used: BTreeSet::new(), next: 0 })
}

/// Output of constraint generation.
#[derive(Clone, Debug)]
pub struct Generated {
    pub ty: Term,
    pub constraints: Vec<Constraint>,
}

struct Generator {
    next: usize,
    constraints: Vec<Constraint>,
}

impl Generator {
    fn fresh(&mut self) -> Term {
        self.next += 1;
        Term::Meta(format!("?t{}", self.next).into())
    }

    fn leq(&mut self, a: Term, b: Term) {
        self.constraints.push(Constraint::new("leq", vec![a, b]));
    }

    fn expr(&mut self, env: &BTreeMap<String, Term>, e: &Expr) -> Result<Term, TypeError> {
        match e {
            Expr::Var(x) => env.get(x).cloned().ok_or_else(|| TypeError::UnboundVariable(x.clone())),
            Expr::IntLit(_) => Ok(encode_type(&SurfaceType::int())),
            Expr::App(f, a) => {
                let t1 = self.expr(env, f)?;
                let t2 = self.expr(env, a)?;
                let (alpha, beta) = (self.fresh(), self.fresh());
                self.leq(t1, Term::ctor("fn", vec![alpha.clone(), beta.clone()]));
                self.leq(t2, alpha);
                Ok(beta)
            }
            Expr::Lam(x, body) => {
                let alpha = self.fresh();
                let mut env = env.clone();
                env.insert(x.clone(), alpha.clone());
                let t = self.expr(&env, body)?;
                Ok(Term::ctor("fn", vec![alpha, t]))
            }
            Expr::AnnLam(x, ann, body) => {
                if let Some(a) = ann.free_vars().into_iter().next() {
                    return Err(TypeError::UnboundTypeVariable(a));
                }
                let sigma = encode_type(ann);
                let mut env = env.clone();
                env.insert(x.clone(), sigma.clone());
                let t = self.expr(&env, body)?;
                Ok(Term::ctor("fn", vec![sigma, t]))
            }
        }
    }
}

/// Reads off the type of `e` and the instantiation constraints it requires.
/// Fresh type variables are named `?t1`, `?t2`, .. in allocation order; an
/// application allocates its two after those of its subexpressions.
pub fn generate(env: &TypeEnv, e: &Expr) -> Result<Generated, TypeError> {
    let env: BTreeMap<String, Term> = env.iter().map(|(x, t)| (x.clone(), encode_type(t))).collect();
    let mut g = Generator { next: 0, constraints: Vec::new() };
    let ty = g.expr(&env, e)?;
    Ok(Generated { ty, constraints: g.constraints })
}

/// The instantiation rules: reflexivity, the two invariant constructor
/// rules, instantiation of a polymorphic left side and skolemisation of a
/// polymorphic right side.
pub fn hr_rules() -> Program {
    crate::syntax::parse_program(RULES).expect("built-in rules are valid")
}

#[derive(Clone, Debug)]
pub struct Typing {
    pub ty: SurfaceType,
    /// The inferred type as a term, zonked through the final bindings.
    pub term: Term,
    /// Metavariables of the result that no constraint determined.
    pub unconstrained: BTreeSet<Name>,
    pub final_state: ExecutionState,
    pub steps: usize,
}

pub fn infer(env: &TypeEnv, e: &Expr) -> Result<Typing, TypeError> {
    infer_with(env, e, &hr_rules(), DEFAULT_FUEL)
}

pub fn infer_with(env: &TypeEnv, e: &Expr, rules: &Program, fuel: usize) -> Result<Typing, TypeError> {
    let g = generate(env, e)?;
    let out = run(ExecutionState::initial(g.constraints), rules, Strategy::Deterministic, fuel)
        .map_err(|err| TypeError::Engine(err.to_string()))?;
    match out.result {
        RunResult::Failed => return Err(TypeError::Mismatch),
        RunResult::OutOfFuel => return Err(TypeError::OutOfFuel(out.trace.len())),
        RunResult::Final => {}
    }
    let residual: Vec<Constraint> = out.state.store_constraints().cloned().collect();
    if !residual.is_empty() {
        return Err(TypeError::Unsolved(residual));
    }
    let term = out.state.builtins.subst.apply(&g.ty);
    let ty = result_type(&term)?;
    Ok(Typing { ty, unconstrained: term.metas(), term, final_state: out.state, steps: out.trace.len() })
}

/// Decodes an inferred type. Every nominal constant in it was introduced
/// while checking against some `forall`, outside of which it now occurs.
fn result_type(term: &Term) -> Result<SurfaceType, TypeError> {
    let ty = decode_type(term).ok_or_else(|| TypeError::Engine(format!("result {term} is not a type")))?;
    match crate::term::support(term).into_iter().next() {
        Some(skolem) => Err(TypeError::SkolemEscape { skolem: skolem.to_string(), ty: ty.to_string() }),
        None => Ok(ty),
    }
}

fn needs_parens_as_arg(t: &SurfaceType) -> bool {
    match t {
        SurfaceType::Con(_, args) => !args.is_empty(),
        SurfaceType::Fun(..) | SurfaceType::Forall(..) => true,
        SurfaceType::Var(_) => false,
    }
}

impl fmt::Display for SurfaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceType::Var(a) => f.write_str(a),
            SurfaceType::Con(c, args) => {
                f.write_str(c)?;
                for a in args {
                    if needs_parens_as_arg(a) {
                        write!(f, " ({a})")?;
                    } else {
                        write!(f, " {a}")?;
                    }
                }
                Ok(())
            }
            SurfaceType::Fun(a, b) => {
                if matches!(**a, SurfaceType::Fun(..) | SurfaceType::Forall(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
            SurfaceType::Forall(a, b) => write!(f, "forall {a}. {b}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                Expr::Var(_) | Expr::IntLit(_) => write!(f, "{e}"),
                _ => write!(f, "({e})"),
            }
        }
        match self {
            Expr::Var(x) => f.write_str(x),
            Expr::IntLit(n) => write!(f, "{n}"),
            Expr::Lam(x, b) => write!(f, "\\{x}. {b}"),
            Expr::AnnLam(x, t, b) => write!(f, "\\({x} : {t}). {b}"),
            Expr::App(g, a) => {
                match **g {
                    Expr::App(..) | Expr::Var(_) | Expr::IntLit(_) => write!(f, "{g}")?,
                    _ => write!(f, "({g})")?,
                }
                f.write_str(" ")?;
                atom(a, f)
            }
        }
    }
}
