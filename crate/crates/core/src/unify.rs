//! Higher-order pattern (L_λ) unification and one-sided matching.
//!
//! Equations are kept in a work list together with the number of binders
//! crossed so far. Each equation is instantiated with the substitution built
//! so far and normalized before it is inspected. "Flex" means a spine headed
//! by a metavariable that may still be bound. In match mode every
//! metavariable of a right-hand side is frozen and behaves as a constant.
//!
//! | left            | right           | action                                              |
//! |-----------------|-----------------|-----------------------------------------------------|
//! | `\x. s`         | `\x. t`         | unify bodies one binder deeper                      |
//! | `\x. s`         | `t`             | η-expand: unify `s` with `(t x)`                    |
//! | `F x̄`           | `F ȳ`           | `F ↦ \z̄. H (z_i where x_i = y_i)` (intersection)    |
//! | `F x̄`           | `t`, F ∈ t      | fail (occurs)                                       |
//! | `F x̄`           | `t`             | invert `t` over `x̄`, pruning flex subterms of `t`   |
//! |                 |                 | that mention bound variables outside `x̄`           |
//! | `h s̄`           | `h t̄`           | decompose (rigid heads: constructor, nominal,       |
//! |                 |                 | bound variable, frozen metavariable)                |
//! | `h s̄`           | `g t̄`           | fail (clash)                                        |
//!
//! A flex-flex equation with different heads goes through inversion: the
//! right spine is pruned to the variables the two sides share, after which
//! it inverts. A bound variable that escapes its scope is reported as a clash.

use std::collections::{BTreeSet, VecDeque};

use crate::engine::BuiltinStore;
use crate::rules::{Guard, GuardAtom};
use crate::term::{alpha_equal, normalize, shift, Constraint, Name, Substitution, Term};

const DEFAULT_FUEL: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UnifyMode {
    #[default]
    Unify,
    /// Metavariables occurring in right-hand sides are rigid.
    Match,
}

#[derive(Clone, Debug)]
pub struct UnifyProblem {
    pub equations: Vec<(Term, Term)>,
    pub mode: UnifyMode,
    /// Fresh metavariables are named `{prefix}{n}` from `fresh_start` upward.
    pub fresh_prefix: Name,
    pub fresh_start: usize,
    pub fuel: usize,
}

impl UnifyProblem {
    pub fn new(equations: Vec<(Term, Term)>) -> Self {
        UnifyProblem { equations, mode: UnifyMode::Unify, fresh_prefix: "?h".into(), fresh_start: 0, fuel: DEFAULT_FUEL }
    }

    pub fn matching(equations: Vec<(Term, Term)>) -> Self {
        UnifyProblem { mode: UnifyMode::Match, ..UnifyProblem::new(equations) }
    }

    pub fn with_fresh(mut self, prefix: &str, start: usize) -> Self {
        self.fresh_prefix = prefix.into();
        self.fresh_start = start;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unifier {
    pub mgu: Substitution,
    /// First unused fresh index after solving.
    pub next_fresh: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnifyFailure {
    #[error("constructor clash")]
    Clash,
    #[error("occurs check")]
    Occurs,
    #[error("term outside the pattern fragment")]
    NonPattern,
    #[error("unification fuel exhausted")]
    OutOfFuel,
}

pub type UnifyOutcome = Result<Unifier, UnifyFailure>;

enum Invert {
    Fail(UnifyFailure),
    Prune { var: Name, keep: Vec<bool> },
}

struct Solver {
    theta: Substitution,
    frozen: BTreeSet<Name>,
    prefix: Name,
    next: usize,
    fuel: usize,
}

fn flex_head<'a>(t: &'a Term, frozen: &BTreeSet<Name>) -> Option<(&'a Name, Vec<&'a Term>)> {
    let (head, args) = t.spine();
    match head {
        Term::Meta(f) if !frozen.contains(f) => Some((f, args)),
        _ => None,
    }
}

/// Argument list of a flex spine as loose bound indices, if it is a pattern.
fn bound_args(args: &[&Term]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match a {
            Term::Bound(i) if !out.contains(i) => out.push(*i),
            _ => return None,
        }
    }
    Some(out)
}

fn pattern_ok(t: &Term, frozen: &BTreeSet<Name>) -> bool {
    if let Some((_, args)) = flex_head(t, frozen) {
        return bound_args(&args).is_some();
    }
    match t {
        Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => true,
        Term::Ctor(_, xs) => xs.iter().all(|x| pattern_ok(x, frozen)),
        Term::Lam(_, b) => pattern_ok(b, frozen),
        Term::App(f, a) => !matches!(t.spine().0, Term::Lam(..)) && pattern_ok(f, frozen) && pattern_ok(a, frozen),
    }
}

/// `\z1 ... \zn. body`
fn abstract_n(n: usize, body: Term) -> Term {
    (0..n).fold(body, |b, i| Term::Lam(format!("z{}", n - i).into(), Box::new(b)))
}

impl Solver {
    fn fresh(&mut self) -> Term {
        let t = Term::Meta(format!("{}{}", self.prefix, self.next).into());
        self.next += 1;
        t
    }

    fn bind(&mut self, var: &Name, t: Term) {
        self.theta.bind(var.clone(), normalize(&t));
    }

    /// `G ↦ \z̄. H (z_i where keep_i)`
    fn prune(&mut self, var: &Name, keep: &[bool]) {
        let m = keep.len();
        let h = self.fresh();
        let args = keep.iter().enumerate().filter(|(_, k)| **k).map(|(p, _)| Term::Bound(m - 1 - p));
        self.bind(var, abstract_n(m, Term::apply_all(h, args)));
    }

    /// Rewrites `t` so that loose index `xs[p]` becomes the `p`-th of `n`
    /// fresh binders. `k` counts binders crossed inside `t`.
    fn invert(&self, t: &Term, f: &Name, xs: &[usize], k: usize) -> Result<Term, Invert> {
        let n = xs.len();
        let map_loose = |i: usize| -> Option<usize> {
            if i < k {
                Some(i)
            } else {
                xs.iter().position(|x| *x == i - k).map(|p| k + n - 1 - p)
            }
        };
        if let Some((g, args)) = flex_head(t, &self.frozen) {
            if g == f {
                return Err(Invert::Fail(UnifyFailure::Occurs));
            }
            let ys = bound_args(&args).ok_or(Invert::Fail(UnifyFailure::NonPattern))?;
            let mapped: Vec<Option<usize>> = ys.iter().map(|y| map_loose(*y)).collect();
            if mapped.iter().any(Option::is_none) {
                return Err(Invert::Prune { var: g.clone(), keep: mapped.iter().map(Option::is_some).collect() });
            }
            let args = mapped.into_iter().flatten().map(Term::Bound);
            return Ok(Term::apply_all(Term::Meta(g.clone()), args));
        }
        match t {
            Term::Bound(i) => map_loose(*i).map(Term::Bound).ok_or(Invert::Fail(UnifyFailure::Clash)),
            Term::Meta(_) | Term::Nominal(_) => Ok(t.clone()),
            Term::Ctor(c, args) => {
                let args = args.iter().map(|a| self.invert(a, f, xs, k)).collect::<Result<_, _>>()?;
                Ok(Term::Ctor(c.clone(), args))
            }
            Term::Lam(h, b) => Ok(Term::Lam(h.clone(), Box::new(self.invert(b, f, xs, k + 1)?))),
            Term::App(g, a) => Ok(Term::app(self.invert(g, f, xs, k)?, self.invert(a, f, xs, k)?)),
        }
    }

    fn solve(&mut self, equations: Vec<(Term, Term)>) -> Result<(), UnifyFailure> {
        let mut work: VecDeque<(Term, Term)> = equations.into();
        while let Some((s, t)) = work.pop_front() {
            if self.fuel == 0 {
                return Err(UnifyFailure::OutOfFuel);
            }
            self.fuel -= 1;
            let s = self.theta.apply(&s);
            let t = self.theta.apply(&t);
            if s == t {
                continue;
            }
            match (&s, &t) {
                (Term::Lam(_, a), Term::Lam(_, b)) => {
                    work.push_front(((**a).clone(), (**b).clone()));
                    continue;
                }
                (Term::Lam(_, a), other) | (other, Term::Lam(_, a)) => {
                    let expanded = Term::app(shift(other, 1, 0), Term::Bound(0));
                    work.push_front(((**a).clone(), expanded));
                    continue;
                }
                _ => {}
            }
            match (flex_head(&s, &self.frozen), flex_head(&t, &self.frozen)) {
                (Some((f, xs)), Some((g, ys))) if f == g => {
                    let xs = bound_args(&xs).ok_or(UnifyFailure::NonPattern)?;
                    let ys = bound_args(&ys).ok_or(UnifyFailure::NonPattern)?;
                    if xs.len() != ys.len() {
                        return Err(UnifyFailure::Clash);
                    }
                    let keep: Vec<bool> = xs.iter().zip(&ys).map(|(x, y)| x == y).collect();
                    let f = f.clone();
                    self.prune(&f, &keep);
                }
                (Some((f, xs)), _) => {
                    let (f, xs) = (f.clone(), bound_args(&xs).ok_or(UnifyFailure::NonPattern)?);
                    self.flex_rigid(&f, &xs, &t, &s, &mut work)?;
                }
                (None, Some((g, ys))) => {
                    let (g, ys) = (g.clone(), bound_args(&ys).ok_or(UnifyFailure::NonPattern)?);
                    self.flex_rigid(&g, &ys, &s, &t, &mut work)?;
                }
                (None, None) => self.rigid_rigid(&s, &t, &mut work)?,
            }
        }
        Ok(())
    }

    fn flex_rigid(
        &mut self,
        f: &Name,
        xs: &[usize],
        t: &Term,
        flex: &Term,
        work: &mut VecDeque<(Term, Term)>,
    ) -> Result<(), UnifyFailure> {
        match self.invert(t, f, xs, 0) {
            Ok(body) => {
                self.bind(f, abstract_n(xs.len(), body));
                Ok(())
            }
            Err(Invert::Prune { var, keep }) => {
                self.prune(&var, &keep);
                work.push_front((flex.clone(), t.clone()));
                Ok(())
            }
            Err(Invert::Fail(e)) => Err(e),
        }
    }

    fn rigid_rigid(&mut self, s: &Term, t: &Term, work: &mut VecDeque<(Term, Term)>) -> Result<(), UnifyFailure> {
        let (h1, a1) = s.spine();
        let (h2, a2) = t.spine();
        match (h1, h2) {
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return Err(UnifyFailure::Clash);
                }
                for (x, y) in xs.iter().zip(ys).rev() {
                    work.push_front((x.clone(), y.clone()));
                }
            }
            (Term::Nominal(a), Term::Nominal(b)) if a == b => {}
            (Term::Meta(a), Term::Meta(b)) if a == b => {}
            (Term::Bound(i), Term::Bound(j)) if i == j => {}
            (Term::Lam(..), _) | (_, Term::Lam(..)) => return Err(UnifyFailure::NonPattern),
            _ => return Err(UnifyFailure::Clash),
        }
        if a1.len() != a2.len() {
            return Err(UnifyFailure::Clash);
        }
        for (x, y) in a1.into_iter().zip(a2).rev() {
            work.push_front((x.clone(), y.clone()));
        }
        Ok(())
    }
}

/// Solves a unification or matching problem. On success the substitution is
/// idempotent and most general.
pub fn pattern_unify(p: UnifyProblem) -> UnifyOutcome {
    let frozen: BTreeSet<Name> = match p.mode {
        UnifyMode::Unify => BTreeSet::new(),
        UnifyMode::Match => p.equations.iter().flat_map(|(_, r)| r.metas()).collect(),
    };
    let mut next = p.fresh_start;
    let mut equations = Vec::with_capacity(p.equations.len());
    for (l, r) in &p.equations {
        let (l, r) = (normalize(l), normalize(r));
        if !pattern_ok(&l, &frozen) || !pattern_ok(&r, &frozen) {
            return Err(UnifyFailure::NonPattern);
        }
        for m in l.metas().iter().chain(r.metas().iter()) {
            if let Some(Ok(k)) = m.strip_prefix(&*p.fresh_prefix).map(str::parse::<usize>) {
                next = next.max(k + 1);
            }
        }
        equations.push((l, r));
    }
    let mut solver = Solver { theta: Substitution::new(), frozen, prefix: p.fresh_prefix, next, fuel: p.fuel };
    solver.solve(equations)?;
    Ok(Unifier { mgu: solver.theta, next_fresh: solver.next })
}

/// Unifies two terms with default settings.
pub fn unify(s: &Term, t: &Term) -> UnifyOutcome {
    pattern_unify(UnifyProblem::new(vec![(s.clone(), t.clone())]))
}

/// Matches rule heads against store constraints pointwise. Metavariables and
/// nominals of the candidates are rigid. Returns the matching substitution
/// (there is at most one), restricted to the patterns' metavariables.
pub fn match_heads(patterns: &[Constraint], candidates: &[Constraint]) -> Vec<Substitution> {
    if patterns.len() != candidates.len() {
        return Vec::new();
    }
    // pattern variables are renamed so they cannot collide with candidate ones
    let vars: Vec<Name> = crate::term::free_metavars(patterns).into_iter().collect();
    let to_local = |v: &Name| vars.iter().position(|x| x == v).map(|i| Name::from(format!("${i}")));
    let mut equations = Vec::new();
    for (p, c) in patterns.iter().zip(candidates) {
        if p.symbol != c.symbol || p.args.len() != c.args.len() {
            return Vec::new();
        }
        for (pa, ca) in p.args.iter().zip(&c.args) {
            equations.push((pa.rename(&to_local, &|_| None), ca.clone()));
        }
    }
    match pattern_unify(UnifyProblem::matching(equations)) {
        Ok(u) => {
            let mut theta = Substitution::new();
            for (i, v) in vars.iter().enumerate() {
                if let Some(t) = u.mgu.get(&format!("${i}")) {
                    theta.insert_simultaneous(v.clone(), t.clone());
                }
            }
            vec![theta]
        }
        Err(_) => Vec::new(),
    }
}

/// `B ⊩ θ(G)`. The built-in substitution is applied after `θ`, so guard
/// atoms are checked against everything the store knows.
pub fn entails(builtins: &BuiltinStore, guard: &Guard, theta: &Substitution) -> bool {
    if !builtins.consistent {
        return true;
    }
    let inst = |t: &Term| builtins.subst.apply(&theta.apply(t));
    guard.atoms.iter().all(|atom| match atom {
        GuardAtom::True => true,
        GuardAtom::Equal(l, r) => alpha_equal(&inst(l), &inst(r)),
        GuardAtom::NotHeadedBy(t, f) => match inst(t) {
            Term::Ctor(g, _) => g != *f,
            Term::Nominal(_) => true,
            _ => false,
        },
    })
}
