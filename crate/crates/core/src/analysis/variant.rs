//! Variance of execution states up to a renaming of run-local variables and
//! a permutation of nominal constants.
//!
//! Two consistent states are variants when there is a bijective renaming ρ
//! of local variables and a bijection π between nominal constants such that
//! the stores and goals coincide as multisets, the built-in bindings of
//! global variables coincide, and the propagation histories coincide once
//! restricted to tokens whose constraints are all still in the store.
//! Global variables are those of the initial state and are never renamed.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{ExecutionState, Token};
use crate::term::{Constraint, Name, Permutation, Substitution, Term};

pub const DEFAULT_MAX_NOMINALS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantWitness {
    /// Renaming of the second state's local variables into the first's.
    pub unifier: Substitution,
    /// Bijection from the second state's nominals onto the first's, padded
    /// with fresh constants when the sets differ in size.
    pub permutation: Permutation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variance {
    Variant(VariantWitness),
    NotVariant,
    /// A nominal set exceeded the search budget.
    Inconclusive,
}

impl Variance {
    pub fn is_variant(&self) -> bool {
        matches!(self, Variance::Variant(_))
    }
}

#[derive(Clone, Default)]
struct Maps {
    /// local variable of state 2 → local variable of state 1
    rho: BTreeMap<Name, Name>,
    rho_inv: BTreeMap<Name, Name>,
    pi: BTreeMap<Name, Name>,
    pi_inv: BTreeMap<Name, Name>,
    /// store id of state 2 → store id of state 1
    ids: BTreeMap<usize, usize>,
}

fn link(fwd: &mut BTreeMap<Name, Name>, inv: &mut BTreeMap<Name, Name>, b: &Name, a: &Name) -> bool {
    match (fwd.get(b), inv.get(a)) {
        (Some(x), _) => x == a,
        (None, Some(_)) => false,
        (None, None) => {
            fwd.insert(b.clone(), a.clone());
            inv.insert(a.clone(), b.clone());
            true
        }
    }
}

struct Ctx<'a> {
    globals: &'a BTreeSet<Name>,
}

impl Ctx<'_> {
    /// Extends `m` so that `t1` and the image of `t2` are identical.
    fn term(&self, t1: &Term, t2: &Term, m: &mut Maps) -> bool {
        match (t1, t2) {
            (Term::Meta(a), Term::Meta(b)) => {
                let (ga, gb) = (self.globals.contains(a), self.globals.contains(b));
                if ga || gb {
                    a == b
                } else {
                    link(&mut m.rho, &mut m.rho_inv, b, a)
                }
            }
            (Term::Nominal(a), Term::Nominal(b)) => link(&mut m.pi, &mut m.pi_inv, b, a),
            (Term::Bound(i), Term::Bound(j)) => i == j,
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.term(x, y, m))
            }
            (Term::Lam(_, a), Term::Lam(_, b)) => self.term(a, b, m),
            (Term::App(f1, a1), Term::App(f2, a2)) => self.term(f1, f2, m) && self.term(a1, a2, m),
            _ => false,
        }
    }

    fn constraint(&self, c1: &Constraint, c2: &Constraint, m: &mut Maps) -> bool {
        c1.symbol == c2.symbol
            && c1.args.len() == c2.args.len()
            && c1.args.iter().zip(&c2.args).all(|(a, b)| self.term(a, b, m))
    }

    /// Matches two multisets element by element, then continues with `k`.
    fn multiset<T>(
        &self,
        xs: &[T],
        ys: &[T],
        used: &mut Vec<bool>,
        m: &Maps,
        each: &dyn Fn(&Self, &T, &T, &mut Maps) -> bool,
        k: &mut dyn FnMut(&Maps) -> bool,
    ) -> bool {
        let Some(x) = xs.first() else {
            return k(m);
        };
        for (j, y) in ys.iter().enumerate() {
            if used[j] {
                continue;
            }
            let mut m2 = m.clone();
            if each(self, x, y, &mut m2) {
                used[j] = true;
                let found = self.multiset(&xs[1..], ys, used, &m2, each, k);
                used[j] = false;
                if found {
                    return true;
                }
            }
        }
        false
    }
}

fn relevant_tokens(s: &ExecutionState) -> BTreeSet<&Token> {
    let alive: BTreeSet<usize> = s.store.iter().map(|(i, _)| *i).collect();
    s.history.iter().filter(|t| t.kept_ids.iter().chain(&t.removed_ids).all(|i| alive.contains(i))).collect()
}

fn witness(m: &Maps, s1: &ExecutionState, s2: &ExecutionState) -> VariantWitness {
    let mut unifier = Substitution::new();
    for (b, a) in &m.rho {
        unifier.insert_simultaneous(b.clone(), Term::Meta(a.clone()));
    }
    let mut pairs: Vec<(Name, Name)> = m.pi.iter().map(|(b, a)| (b.clone(), a.clone())).collect();
    let mut free1: Vec<Name> = s1.nominals.iter().filter(|a| !m.pi_inv.contains_key(*a)).cloned().collect();
    let mut pad = 0;
    for b in s2.nominals.iter().filter(|b| !m.pi.contains_key(*b)) {
        let a = free1.pop().unwrap_or_else(|| {
            pad += 1;
            format!("#pad{pad}").into()
        });
        pairs.push((b.clone(), a));
    }
    let permutation = Permutation::from_pairs(pairs).unwrap_or_default();
    VariantWitness { unifier, permutation }
}

/// Decides variance with the default nominal budget.
pub fn is_variant(s1: &ExecutionState, s2: &ExecutionState) -> Variance {
    is_variant_with(s1, s2, DEFAULT_MAX_NOMINALS)
}

pub fn is_variant_with(s1: &ExecutionState, s2: &ExecutionState, max_nominals: usize) -> Variance {
    match (s1.is_consistent(), s2.is_consistent()) {
        (false, false) => {
            return Variance::Variant(VariantWitness { unifier: Substitution::new(), permutation: Permutation::identity() })
        }
        (true, true) => {}
        _ => return Variance::NotVariant,
    }
    if s1.nominals.len() > max_nominals || s2.nominals.len() > max_nominals {
        return Variance::Inconclusive;
    }
    if s1.store.len() != s2.store.len() || s1.goal.len() != s2.goal.len() {
        return Variance::NotVariant;
    }
    let globals: BTreeSet<Name> = s1.globals.union(&s2.globals).cloned().collect();
    let b1 = s1.builtins.subst.restrict(&globals);
    let b2 = s2.builtins.subst.restrict(&globals);
    if b1.len() != b2.len() || b1.domain().ne(b2.domain()) {
        return Variance::NotVariant;
    }
    let ctx = Ctx { globals: &globals };
    let mut m = Maps::default();
    for ((_, t1), (_, t2)) in b1.iter().zip(b2.iter()) {
        if !ctx.term(t1, t2, &mut m) {
            return Variance::NotVariant;
        }
    }
    let tokens1 = relevant_tokens(s1);
    let tokens2 = relevant_tokens(s2);
    let mut found = None;
    let store_each = |c: &Ctx, x: &(usize, Constraint), y: &(usize, Constraint), m: &mut Maps| {
        m.ids.insert(y.0, x.0);
        c.constraint(&x.1, &y.1, m)
    };
    let goal_each = |c: &Ctx, x: &Constraint, y: &Constraint, m: &mut Maps| c.constraint(x, y, m);
    let mut after_goals = |m: &Maps| {
        let mut used = vec![false; s2.store.len()];
        ctx.multiset(&s1.store, &s2.store, &mut used, m, &store_each, &mut |m: &Maps| {
            let mapped: Option<BTreeSet<Token>> = tokens2
                .iter()
                .map(|t| {
                    let ids = |xs: &Vec<usize>| xs.iter().map(|i| m.ids.get(i).copied()).collect::<Option<Vec<_>>>();
                    Some(Token { kept_ids: ids(&t.kept_ids)?, removed_ids: ids(&t.removed_ids)?, rule: t.rule.clone() })
                })
                .collect();
            let ok = mapped.is_some_and(|set| set.iter().eq(tokens1.iter().copied()));
            if ok {
                found = Some(m.clone());
            }
            ok
        })
    };
    let mut used = vec![false; s2.goal.len()];
    ctx.multiset(&s1.goal, &s2.goal, &mut used, &m, &goal_each, &mut after_goals);
    match found {
        Some(m) => Variance::Variant(witness(&m, s1, s2)),
        None => Variance::NotVariant,
    }
}
