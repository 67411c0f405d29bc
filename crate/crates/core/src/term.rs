//! λ-tree terms, constraints, substitutions and permutations of nominal
//! constants.
//!
//! Bound variables are de Bruijn indices; the binder name carried by
//! [`Term::Lam`] is only a printing hint and is ignored by equality and
//! hashing, so α-equivalent terms compare equal structurally.
//!
//! The public equality theory is α, β₀ and η. Full β-reduction is used
//! internally when a substitution plugs an abstraction into the head of an
//! application.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub type Name = Arc<str>;

/// Symbol of the built-in equality constraint.
pub const EQ: &str = "eq";
/// Symbol of the trivially true constraint.
pub const TRUE: &str = "true";

/// Upper bound on the work done by a single normalization. Only reachable for
/// terms outside the pattern fragment, e.g. self-application.
const REDUCTION_BUDGET: usize = 200_000;

#[derive(Clone, Debug)]
pub enum Term {
    /// Metavariable (logic variable), `X`, `?m3`.
    Meta(Name),
    /// Nominal constant, `#a`.
    Nominal(Name),
    /// Bound variable as a de Bruijn index.
    Bound(usize),
    Ctor(Name, Vec<Term>),
    /// Abstraction; the name is a printing hint only.
    Lam(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Meta(a), Term::Meta(b)) => a == b,
            (Term::Nominal(a), Term::Nominal(b)) => a == b,
            (Term::Bound(a), Term::Bound(b)) => a == b,
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) => f == g && xs == ys,
            (Term::Lam(_, a), Term::Lam(_, b)) => a == b,
            (Term::App(f, a), Term::App(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Term::Meta(n) | Term::Nominal(n) => n.hash(state),
            Term::Bound(i) => i.hash(state),
            Term::Ctor(f, xs) => {
                f.hash(state);
                xs.hash(state);
            }
            Term::Lam(_, b) => b.hash(state),
            Term::App(f, a) => {
                f.hash(state);
                a.hash(state);
            }
        }
    }
}

impl Term {
    pub fn meta(name: &str) -> Term {
        Term::Meta(name.into())
    }

    pub fn nominal(name: &str) -> Term {
        Term::Nominal(name.into())
    }

    pub fn ctor(name: &str, args: Vec<Term>) -> Term {
        Term::Ctor(name.into(), args)
    }

    pub fn constant(name: &str) -> Term {
        Term::Ctor(name.into(), Vec::new())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    /// Applies `head` to every argument, left to right.
    pub fn apply_all(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    /// Builds `λx. body`, binding every free occurrence of the metavariable
    /// named `x` in `body`.
    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.into(), Box::new(abstract_meta(&body, x, 0)))
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => 1,
            Term::Ctor(_, xs) => 1 + xs.iter().map(Term::size).sum::<usize>(),
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    /// True if the term mentions no metavariable.
    pub fn is_ground(&self) -> bool {
        self.metas().is_empty()
    }

    pub fn metas(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_metas(&mut out);
        out
    }

    pub(crate) fn collect_metas(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Meta(n) => {
                out.insert(n.clone());
            }
            Term::Nominal(_) | Term::Bound(_) => {}
            Term::Ctor(_, xs) => xs.iter().for_each(|x| x.collect_metas(out)),
            Term::Lam(_, b) => b.collect_metas(out),
            Term::App(f, a) => {
                f.collect_metas(out);
                a.collect_metas(out);
            }
        }
    }

    pub(crate) fn collect_nominals(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Nominal(n) => {
                out.insert(n.clone());
            }
            Term::Meta(_) | Term::Bound(_) => {}
            Term::Ctor(_, xs) => xs.iter().for_each(|x| x.collect_nominals(out)),
            Term::Lam(_, b) => b.collect_nominals(out),
            Term::App(f, a) => {
                f.collect_nominals(out);
                a.collect_nominals(out);
            }
        }
    }

    pub(crate) fn contains_meta(&self, name: &str) -> bool {
        match self {
            Term::Meta(n) => &**n == name,
            Term::Nominal(_) | Term::Bound(_) => false,
            Term::Ctor(_, xs) => xs.iter().any(|x| x.contains_meta(name)),
            Term::Lam(_, b) => b.contains_meta(name),
            Term::App(f, a) => f.contains_meta(name) || a.contains_meta(name),
        }
    }

    /// Counts occurrences of `forall`-like constructor nodes named `symbol`.
    pub fn count_ctor(&self, symbol: &str) -> usize {
        match self {
            Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => 0,
            Term::Ctor(f, xs) => {
                usize::from(&**f == symbol) + xs.iter().map(|x| x.count_ctor(symbol)).sum::<usize>()
            }
            Term::Lam(_, b) => b.count_ctor(symbol),
            Term::App(f, a) => f.count_ctor(symbol) + a.count_ctor(symbol),
        }
    }

    pub fn count_nominals(&self) -> usize {
        match self {
            Term::Nominal(_) => 1,
            Term::Meta(_) | Term::Bound(_) => 0,
            Term::Ctor(_, xs) => xs.iter().map(Term::count_nominals).sum(),
            Term::Lam(_, b) => b.count_nominals(),
            Term::App(f, a) => f.count_nominals() + a.count_nominals(),
        }
    }

    /// Rewrites every metavariable and nominal through the given maps,
    /// leaving unmapped names alone.
    pub(crate) fn rename(&self, metas: &dyn Fn(&Name) -> Option<Name>, noms: &dyn Fn(&Name) -> Option<Name>) -> Term {
        match self {
            Term::Meta(n) => Term::Meta(metas(n).unwrap_or_else(|| n.clone())),
            Term::Nominal(n) => Term::Nominal(noms(n).unwrap_or_else(|| n.clone())),
            Term::Bound(i) => Term::Bound(*i),
            Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|x| x.rename(metas, noms)).collect()),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.rename(metas, noms))),
            Term::App(f, a) => Term::app(f.rename(metas, noms), a.rename(metas, noms)),
        }
    }
}

// ---------------------------------------------------------------------------
// de Bruijn plumbing

fn abstract_meta(t: &Term, x: &str, depth: usize) -> Term {
    match t {
        Term::Meta(n) if &**n == x => Term::Bound(depth),
        Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => t.clone(),
        Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|a| abstract_meta(a, x, depth)).collect()),
        Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(abstract_meta(b, x, depth + 1))),
        Term::App(f, a) => Term::app(abstract_meta(f, x, depth), abstract_meta(a, x, depth)),
    }
}

/// Adds `delta` to every bound index at or above `cutoff`.
pub(crate) fn shift(t: &Term, delta: isize, cutoff: usize) -> Term {
    match t {
        Term::Bound(i) if *i >= cutoff => Term::Bound((*i as isize + delta) as usize),
        Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => t.clone(),
        Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|a| shift(a, delta, cutoff)).collect()),
        Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(shift(b, delta, cutoff + 1))),
        Term::App(f, a) => Term::app(shift(f, delta, cutoff), shift(a, delta, cutoff)),
    }
}

/// True if bound index `idx` (relative to the root of `t`) occurs in `t`.
pub(crate) fn has_loose(t: &Term, idx: usize) -> bool {
    match t {
        Term::Bound(i) => *i == idx,
        Term::Meta(_) | Term::Nominal(_) => false,
        Term::Ctor(_, xs) => xs.iter().any(|a| has_loose(a, idx)),
        Term::Lam(_, b) => has_loose(b, idx + 1),
        Term::App(f, a) => has_loose(f, idx) || has_loose(a, idx),
    }
}

/// `body[0 ↦ arg]` for the body of an abstraction.
fn instantiate(body: &Term, arg: &Term) -> Term {
    fn go(t: &Term, arg: &Term, k: usize) -> Term {
        match t {
            Term::Bound(i) if *i == k => shift(arg, k as isize, 0),
            Term::Bound(i) if *i > k => Term::Bound(i - 1),
            Term::Bound(_) | Term::Meta(_) | Term::Nominal(_) => t.clone(),
            Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|a| go(a, arg, k)).collect()),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(go(b, arg, k + 1))),
            Term::App(f, a) => Term::app(go(f, arg, k), go(a, arg, k)),
        }
    }
    go(body, arg, 0)
}

struct Reducer {
    full_beta: bool,
    budget: usize,
}

impl Reducer {
    fn is_variable(t: &Term) -> bool {
        matches!(t, Term::Bound(_) | Term::Nominal(_) | Term::Meta(_))
    }

    fn norm(&mut self, t: &Term) -> Term {
        match t {
            Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => t.clone(),
            Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|x| self.norm(x)).collect()),
            Term::Lam(h, b) => {
                let body = self.norm(b);
                if let Term::App(g, x) = &body {
                    if **x == Term::Bound(0) && !has_loose(g, 0) {
                        return shift(g, -1, 0);
                    }
                }
                Term::Lam(h.clone(), Box::new(body))
            }
            Term::App(f, a) => {
                let mut f = self.norm(f);
                let mut a = self.norm(a);
                // head reductions loop rather than recurse so that long
                // reduction sequences cannot exhaust the stack
                loop {
                    match f {
                        Term::Lam(h, body) => {
                            if (self.full_beta || Self::is_variable(&a)) && self.budget > 0 {
                                let reduct = instantiate(&body, &a);
                                self.budget = self.budget.saturating_sub(1 + reduct.size());
                                match reduct {
                                    Term::App(g, b) => {
                                        f = self.norm(&g);
                                        a = self.norm(&b);
                                    }
                                    other => return self.norm(&other),
                                }
                            } else {
                                return Term::app(Term::Lam(h, body), a);
                            }
                        }
                        f => return Term::app(f, a),
                    }
                }
            }
        }
    }
}

/// β₀/η normal form: contracts redexes whose argument is a variable (bound,
/// nominal or meta) and η-contracts abstractions.
pub fn beta0_normalize(t: &Term) -> Term {
    Reducer { full_beta: false, budget: REDUCTION_BUDGET }.norm(t)
}

/// Full β/η normal form, bounded by an internal work budget.
pub(crate) fn normalize(t: &Term) -> Term {
    Reducer { full_beta: true, budget: REDUCTION_BUDGET }.norm(t)
}

pub fn alpha_equal(a: &Term, b: &Term) -> bool {
    beta0_normalize(a) == beta0_normalize(b)
}

/// True if every applied metavariable is applied to distinct variables bound
/// inside the term (after η-contracting argument expansions).
pub fn is_pattern(t: &Term) -> bool {
    fn go(t: &Term, depth: usize) -> bool {
        match t {
            Term::Meta(_) | Term::Nominal(_) | Term::Bound(_) => true,
            Term::Ctor(_, xs) => xs.iter().all(|x| go(x, depth)),
            Term::Lam(_, b) => go(b, depth + 1),
            Term::App(..) => {
                let (head, args) = t.spine();
                match head {
                    Term::Meta(_) => {
                        let mut seen = BTreeSet::new();
                        args.iter().all(|a| match a {
                            Term::Bound(i) => *i < depth && seen.insert(*i),
                            _ => false,
                        })
                    }
                    Term::Lam(..) => false,
                    _ => go(head, depth) && args.iter().all(|a| go(a, depth)),
                }
            }
        }
    }
    go(&beta0_normalize(t), 0)
}

// ---------------------------------------------------------------------------
// constraints

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub symbol: Name,
    pub args: Vec<Term>,
}

impl Constraint {
    pub fn new(symbol: &str, args: Vec<Term>) -> Self {
        Constraint { symbol: symbol.into(), args }
    }

    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Constraint::new(EQ, vec![lhs, rhs])
    }

    pub fn truth() -> Self {
        Constraint::new(TRUE, Vec::new())
    }

    pub fn is_builtin(&self) -> bool {
        self.is_eq() || self.is_true()
    }

    pub fn is_eq(&self) -> bool {
        &*self.symbol == EQ && self.args.len() == 2
    }

    pub fn is_true(&self) -> bool {
        &*self.symbol == TRUE && self.args.is_empty()
    }

    pub fn map_args(&self, f: impl FnMut(&Term) -> Term) -> Constraint {
        Constraint { symbol: self.symbol.clone(), args: self.args.iter().map(f).collect() }
    }

    pub fn normalized(&self) -> Constraint {
        self.map_args(beta0_normalize)
    }

    pub fn metas(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.args.iter().for_each(|a| a.collect_metas(&mut out));
        out
    }
}

/// Every argument is a pattern and no nominal constant occurs.
pub fn is_well_defined_constraint(c: &Constraint) -> bool {
    c.args.iter().all(|a| is_pattern(a) && support(a).is_empty())
}

/// Anything that can report its nominal support and free metavariables.
pub trait Syntax {
    fn visit_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term));
}

impl Syntax for Term {
    fn visit_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        f(self)
    }
}

impl Syntax for Constraint {
    fn visit_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        self.args.iter().for_each(f)
    }
}

impl<T: Syntax> Syntax for [T] {
    fn visit_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        for x in self {
            x.visit_terms(f)
        }
    }
}

impl<T: Syntax> Syntax for Vec<T> {
    fn visit_terms<'a>(&'a self, f: &mut dyn FnMut(&'a Term)) {
        self.as_slice().visit_terms(f)
    }
}

/// The nominal constants occurring in `x`.
pub fn support<S: Syntax + ?Sized>(x: &S) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    x.visit_terms(&mut |t| t.collect_nominals(&mut out));
    out
}

pub fn free_metavars<S: Syntax + ?Sized>(x: &S) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    x.visit_terms(&mut |t| t.collect_metas(&mut out));
    out
}

// ---------------------------------------------------------------------------
// substitutions

/// Idempotent map from metavariables to closed, normal terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(var: &str, t: Term) -> Self {
        let mut s = Self::new();
        s.bind(var.into(), t);
        s
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.bindings.keys()
    }

    /// Adds `var ↦ t`, keeping the substitution idempotent: `t` is first
    /// resolved through the current bindings, then the new binding is pushed
    /// into every existing range.
    ///
    /// The caller guarantees `var` does not occur in the resolved `t`.
    pub fn bind(&mut self, var: Name, t: Term) {
        let t = self.apply(&t);
        debug_assert!(!t.contains_meta(&var), "cyclic binding for {var}");
        let single = Substitution { bindings: BTreeMap::from([(var.clone(), t.clone())]) };
        for range in self.bindings.values_mut() {
            if range.contains_meta(&var) {
                *range = single.apply(range);
            }
        }
        self.bindings.insert(var, t);
    }

    /// Merges `other` into `self` binding by binding.
    pub fn compose(&mut self, other: &Substitution) {
        for (v, t) in other.iter() {
            match self.get(v).cloned() {
                Some(_) => {}
                None => self.bind(v.clone(), t.clone()),
            }
        }
    }

    /// Capture-avoiding application followed by normalization.
    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        fn go(s: &Substitution, t: &Term) -> Term {
            match t {
                Term::Meta(n) => match s.bindings.get(n) {
                    Some(r) => r.clone(),
                    None => t.clone(),
                },
                Term::Nominal(_) | Term::Bound(_) => t.clone(),
                Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|x| go(s, x)).collect()),
                Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(go(s, b))),
                Term::App(f, a) => Term::app(go(s, f), go(s, a)),
            }
        }
        normalize(&go(self, t))
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        c.map_args(|a| self.apply(a))
    }

    /// Keeps only bindings for the given variables.
    pub fn restrict(&self, vars: &BTreeSet<Name>) -> Substitution {
        Substitution {
            bindings: self.bindings.iter().filter(|(k, _)| vars.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    /// Inserts a binding without resolving it against the others. Matching
    /// substitutions map rule variables to state terms that may reuse the
    /// same names; they are applied simultaneously and need not be
    /// idempotent.
    pub(crate) fn insert_simultaneous(&mut self, var: Name, t: Term) {
        self.bindings.insert(var, t);
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.bind(v, t);
        }
        s
    }
}

pub fn apply_subst(theta: &Substitution, t: &Term) -> Term {
    theta.apply(t)
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        write!(f, "}}")
    }
}

// ---------------------------------------------------------------------------
// permutations

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Permutation {
    map: BTreeMap<Name, Name>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("mapping is not injective: {0} has two preimages")]
pub struct NotABijection(pub Name);

impl Permutation {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn swap(a: &str, b: &str) -> Self {
        let mut map = BTreeMap::new();
        if a != b {
            map.insert(a.into(), b.into());
            map.insert(b.into(), a.into());
        }
        Permutation { map }
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self, NotABijection>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<Name>,
        B: Into<Name>,
    {
        let mut map = BTreeMap::new();
        let mut image = BTreeSet::new();
        for (a, b) in pairs {
            let b: Name = b.into();
            if !image.insert(b.clone()) {
                return Err(NotABijection(b));
            }
            map.insert(a.into(), b);
        }
        Ok(Permutation { map })
    }

    pub fn get(&self, a: &str) -> Option<&Name> {
        self.map.get(a)
    }

    pub fn image(&self, a: &Name) -> Name {
        self.map.get(a).cloned().unwrap_or_else(|| a.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.map.iter()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    pub fn inverse(&self) -> Permutation {
        Permutation { map: self.map.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let mut map: BTreeMap<Name, Name> = other.map.iter().map(|(a, b)| (a.clone(), self.image(b))).collect();
        for (a, b) in &self.map {
            map.entry(a.clone()).or_insert_with(|| b.clone());
        }
        Permutation { map }
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.rename(&|_| None, &|n| self.map.get(n).cloned())
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        c.map_args(|a| self.apply(a))
    }
}

pub fn apply_permutation(pi: &Permutation, t: &Term) -> Term {
    pi.apply(t)
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (a, b)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a} ↦ {b}")?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// printing

struct Printer<'a> {
    avoid: &'a BTreeSet<String>,
    scope: Vec<String>,
}

impl Printer<'_> {
    fn fresh_binder(&self, hint: &str) -> String {
        let base = if hint.is_empty() { "x" } else { hint };
        let taken = |s: &str| self.avoid.contains(s) || self.scope.iter().any(|b| b == s);
        if !taken(base) {
            return base.to_string();
        }
        (1..).map(|k| format!("{base}{k}")).find(|c| !taken(c)).expect("infinite supply")
    }

    fn write(&mut self, t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match t {
            Term::Meta(n) => write!(f, "{n}"),
            Term::Nominal(n) => write!(f, "{n}"),
            Term::Bound(i) => match self.scope.len().checked_sub(i + 1).and_then(|k| self.scope.get(k)) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "^{i}"),
            },
            Term::Ctor(name, args) => {
                if let Some(items) = list_items(t) {
                    write!(f, "[")?;
                    for (i, x) in items.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        self.write(x, f)?;
                    }
                    return write!(f, "]");
                }
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, x) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        self.write(x, f)?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            Term::Lam(hint, body) => {
                let name = self.fresh_binder(hint);
                write!(f, "\\{name}. ")?;
                self.scope.push(name);
                let r = self.write(body, f);
                self.scope.pop();
                r
            }
            Term::App(..) => {
                let (head, args) = t.spine();
                write!(f, "(")?;
                self.write(head, f)?;
                for a in args {
                    write!(f, " ")?;
                    self.write(a, f)?;
                }
                write!(f, ")")
            }
        }
    }
}

fn list_items(t: &Term) -> Option<Vec<&Term>> {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Ctor(n, xs) if &**n == "nil" && xs.is_empty() => return Some(items),
            Term::Ctor(n, xs) if &**n == "cons" && xs.len() == 2 => {
                items.push(&xs[0]);
                cur = &xs[1];
            }
            _ => return None,
        }
    }
}

fn collect_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Meta(n) | Term::Nominal(n) => {
            out.insert(n.to_string());
        }
        Term::Bound(_) => {}
        Term::Ctor(f, xs) => {
            out.insert(f.to_string());
            xs.iter().for_each(|x| collect_names(x, out));
        }
        Term::Lam(_, b) => collect_names(b, out),
        Term::App(f, a) => {
            collect_names(f, out);
            collect_names(a, out);
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut avoid = BTreeSet::new();
        collect_names(self, &mut avoid);
        Printer { avoid: &avoid, scope: Vec::new() }.write(self, f)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_eq() {
            return write!(f, "{} = {}", self.args[0], self.args[1]);
        }
        write!(f, "{}", self.symbol)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: Term) -> Term {
        Term::ctor("f", vec![x])
    }

    #[test]
    fn beta0_contracts_variable_redex() {
        // (λx. f(x)) y under a binder for y
        let t = Term::lam("y", Term::app(Term::lam("x", f(Term::meta("x"))), Term::meta("y")));
        assert_eq!(beta0_normalize(&t), Term::lam("y", f(Term::meta("y"))));
    }

    #[test]
    fn beta0_leaves_normal_terms() {
        let t = f(Term::meta("F"));
        assert_eq!(beta0_normalize(&t), t);
    }

    #[test]
    fn eta_contracts() {
        let t = Term::lam("x", Term::app(Term::meta("F"), Term::meta("x")));
        assert_eq!(beta0_normalize(&t), Term::meta("F"));
    }

    #[test]
    fn eta_not_applied_when_variable_occurs_in_function() {
        // λx. (x x) is not an η-redex
        let t = Term::lam("x", Term::app(Term::meta("x"), Term::meta("x")));
        assert_eq!(beta0_normalize(&t), t);
    }

    #[test]
    fn beta0_keeps_general_redex() {
        let t = Term::app(Term::lam("x", f(Term::meta("x"))), Term::constant("a"));
        assert_eq!(beta0_normalize(&t), t);
        assert_eq!(normalize(&t), f(Term::constant("a")));
    }

    #[test]
    fn alpha_equality() {
        let idx = Term::lam("x", Term::meta("x"));
        let idy = Term::lam("y", Term::meta("y"));
        assert!(alpha_equal(&idx, &idy));
        assert!(alpha_equal(&Term::lam("x", Term::meta("F")), &Term::lam("y", Term::meta("F"))));
        assert!(!alpha_equal(&idx, &Term::lam("x", Term::nominal("a"))));
    }

    #[test]
    fn pattern_checks() {
        let x = || Term::meta("x");
        let y = || Term::meta("y");
        let fxy = Term::lam("x", Term::lam("y", Term::apply_all(Term::meta("F"), [x(), y()])));
        assert!(is_pattern(&fxy));
        let fxx = Term::lam("x", Term::apply_all(Term::meta("F"), [x(), x()]));
        assert!(!is_pattern(&fxx));
        let fgx = Term::lam("x", Term::app(Term::meta("F"), Term::ctor("g", vec![x()])));
        assert!(!is_pattern(&fgx));
        // η-expanded bound variable argument
        let eta = Term::lam("x", Term::app(Term::meta("F"), Term::lam("z", Term::app(x(), Term::meta("z")))));
        assert!(is_pattern(&eta));
        // the literal λx. F (λz. x x) is not a pattern
        let lit = Term::lam("x", Term::app(Term::meta("F"), Term::lam("z", Term::app(x(), x()))));
        assert!(!is_pattern(&lit));
        // metavariable applied to a nominal is outside the fragment
        assert!(!is_pattern(&Term::app(Term::meta("F"), Term::nominal("#a"))));
    }

    #[test]
    fn well_defined_constraints() {
        let leq = Constraint::new("leq", vec![Term::meta("T"), Term::meta("T")]);
        assert!(is_well_defined_constraint(&leq));
        let nom = Constraint::new("leq", vec![Term::nominal("#a"), Term::meta("T")]);
        assert!(!is_well_defined_constraint(&nom));
        let bad = Constraint::new(
            "c",
            vec![Term::lam("x", Term::app(Term::meta("F"), Term::ctor("g", vec![Term::meta("x")])))],
        );
        assert!(!is_well_defined_constraint(&bad));
    }

    #[test]
    fn substitution_examples() {
        let theta = Substitution::singleton("F", Term::lam("z", Term::meta("z")));
        let t = Term::app(Term::meta("F"), Term::nominal("#a"));
        assert_eq!(theta.apply(&t), Term::nominal("#a"));

        let t = Term::lam("x", f(Term::meta("x")));
        assert_eq!(Substitution::new().apply(&t), t);

        let theta = Substitution::singleton("T", Term::constant("int"));
        assert_eq!(theta.apply(&Term::meta("T")), Term::constant("int"));
    }

    #[test]
    fn substitution_does_not_capture() {
        // θ = {F ↦ x-free term}; the binder x in the context stays bound in
        // the context only.
        let theta = Substitution::singleton("F", Term::meta("x"));
        let t = Term::lam("x", Term::ctor("g", vec![Term::meta("x"), Term::meta("F")]));
        let r = theta.apply(&t);
        assert_eq!(r, Term::Lam("x".into(), Box::new(Term::ctor("g", vec![Term::Bound(0), Term::meta("x")]))));
    }

    #[test]
    fn substitution_stays_idempotent() {
        let mut s = Substitution::new();
        s.bind("X".into(), f(Term::meta("Y")));
        s.bind("Y".into(), Term::constant("a"));
        assert_eq!(s.get("X"), Some(&f(Term::constant("a"))));
        let t = Term::ctor("g", vec![Term::meta("X"), Term::meta("Y")]);
        assert_eq!(s.apply(&s.apply(&t)), s.apply(&t));
    }

    #[test]
    fn permutation_examples() {
        let pi = Permutation::swap("#a", "#b");
        assert_eq!(pi.apply(&f(Term::nominal("#a"))), f(Term::nominal("#b")));
        let t = Term::ctor("f", vec![Term::nominal("#a"), Term::nominal("#b")]);
        assert_eq!(pi.apply(&t), Term::ctor("f", vec![Term::nominal("#b"), Term::nominal("#a")]));
        assert_eq!(Permutation::identity().apply(&t), t);
        assert!(Permutation::from_pairs([("#a", "#c"), ("#b", "#c")]).is_err());
    }

    #[test]
    fn support_and_metas() {
        assert_eq!(support(&f(Term::nominal("#a"))), BTreeSet::from(["#a".into()]));
        assert!(support(&Term::meta("F")).is_empty());
        let redex = Term::app(Term::lam("x", Term::meta("x")), Term::nominal("#a"));
        assert_eq!(support(&redex), BTreeSet::from(["#a".into()]));
        assert_eq!(support(&beta0_normalize(&redex)), BTreeSet::from(["#a".into()]));

        assert_eq!(free_metavars(&Term::meta("F")), BTreeSet::from(["F".into()]));
        assert!(free_metavars(&Term::lam("x", Term::meta("x"))).is_empty());
        let t = Term::lam("x", Term::app(Term::meta("F"), Term::meta("x")));
        assert_eq!(free_metavars(&t), BTreeSet::from(["F".into()]));
    }

    #[test]
    fn self_application_is_bounded() {
        let w = Term::lam("x", Term::app(Term::meta("x"), Term::meta("x")));
        let omega = Term::app(w.clone(), w);
        // terminates thanks to the work budget
        let _ = normalize(&omega);
    }

    #[test]
    fn printing() {
        let t = Term::ctor("forall", vec![Term::lam("A", Term::ctor("fn", vec![Term::meta("A"), Term::meta("A")]))]);
        assert_eq!(t.to_string(), "forall(\\A. fn(A, A))");
        let l = Term::ctor("cons", vec![Term::constant("a"), Term::constant("nil")]);
        assert_eq!(l.to_string(), "[a]");
        // binder hint clashing with a free metavariable gets renamed
        let t = Term::Lam("X".into(), Box::new(Term::ctor("f", vec![Term::Bound(0), Term::meta("X")])));
        assert_eq!(t.to_string(), "\\X1. f(X1, X)");
    }
}
