//! Critical pairs: the two successor states of a minimal store on which two
//! rule instances overlap.

use std::collections::BTreeSet;

use crate::engine::{step_apply, ApplyCandidate, ExecutionState};
use crate::rules::{GuardAtom, Program, Rule};
use crate::term::{free_metavars, Constraint, Name, Substitution, Term};
use crate::unify::{pattern_unify, UnifyProblem};

/// Which heads were identified. Head positions index `kept ++ removed` of
/// each rule; `pairs[k] = (i, j)` aligns head `i` of the first rule with head
/// `j` of the second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Overlap {
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardStatus {
    /// Every guard atom holds or is an equation carried by the built-ins.
    Entailed,
    /// A guard atom is false once the overlap is unified; both states are
    /// inconsistent.
    Unsatisfiable,
    /// A disequality guard depends on an unbound variable. The built-in store
    /// cannot record it, so exploration from this pair is approximate.
    Undetermined(Vec<GuardAtom>),
}

#[derive(Clone, Debug)]
pub struct CriticalPair {
    pub rule1: Name,
    pub rule2: Name,
    pub overlap: Overlap,
    /// The overlap store before either rule fires.
    pub origin: ExecutionState,
    pub left: ExecutionState,
    pub right: ExecutionState,
    pub guard: GuardStatus,
}

impl CriticalPair {
    /// Applies `theta` to both states, e.g. to study a family of instances.
    pub fn instantiate(&self, theta: &Substitution) -> CriticalPair {
        let inst = |s: &ExecutionState| {
            let mut s = s.clone();
            for (v, t) in theta.iter() {
                s.builtins.subst.bind(v.clone(), t.clone());
            }
            let b = s.builtins.subst.clone();
            s.goal = s.goal.iter().map(|c| b.apply_constraint(c)).collect();
            for (_, c) in &mut s.store {
                *c = b.apply_constraint(c);
            }
            s.fresh.avoid(free_metavars(&s.goal).iter().chain(&crate::term::support(&s.goal)));
            s
        };
        CriticalPair {
            rule1: self.rule1.clone(),
            rule2: self.rule2.clone(),
            overlap: self.overlap.clone(),
            origin: inst(&self.origin),
            left: inst(&self.left),
            right: inst(&self.right),
            guard: self.guard.clone(),
        }
    }
}

/// Rule variables of side `side` become `?V_side`.
fn rename_rule(side: usize) -> impl Fn(&Name) -> Option<Name> {
    move |v: &Name| Some(format!("?{v}_{side}").into())
}

fn heads(rule: &Rule) -> Vec<Constraint> {
    rule.kept.iter().chain(&rule.removed).cloned().collect()
}

fn rename_constraint(c: &Constraint, f: &dyn Fn(&Name) -> Option<Name>) -> Constraint {
    c.map_args(|a| a.rename(f, &|_| None))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(xs: &[usize]) -> Vec<Vec<usize>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn guard_status(atoms: &[GuardAtom], theta: &Substitution) -> Option<Vec<GuardAtom>> {
    let mut undetermined = Vec::new();
    for atom in atoms {
        if let GuardAtom::NotHeadedBy(t, f) = atom {
            match theta.apply(t) {
                Term::Ctor(g, _) if g == *f => return None,
                Term::Ctor(..) | Term::Nominal(_) => {}
                other => undetermined.push(GuardAtom::NotHeadedBy(other, f.clone())),
            }
        }
    }
    Some(undetermined)
}

/// Enumerates critical pairs for every unordered pair of rules (a rule is
/// paired with a renamed copy of itself too), every nonempty overlap and
/// every alignment of the overlapping heads.
pub fn critical_pairs(program: &Program) -> Vec<CriticalPair> {
    let mut out = Vec::new();
    for i in 0..program.rules.len() {
        for j in i..program.rules.len() {
            pairs_for(program, i, j, &mut out);
        }
    }
    out
}

fn pairs_for(program: &Program, i: usize, j: usize, out: &mut Vec<CriticalPair>) {
    let (r1, r2) = (&program.rules[i], &program.rules[j]);
    let ren1 = rename_rule(1);
    let ren2 = rename_rule(2);
    let h1: Vec<Constraint> = heads(r1).iter().map(|c| rename_constraint(c, &ren1)).collect();
    let h2: Vec<Constraint> = heads(r2).iter().map(|c| rename_constraint(c, &ren2)).collect();
    let guard_atoms = |r: &Rule, f: &dyn Fn(&Name) -> Option<Name>| -> Vec<GuardAtom> {
        r.guard
            .atoms
            .iter()
            .map(|a| match a {
                GuardAtom::True => GuardAtom::True,
                GuardAtom::Equal(l, r) => GuardAtom::Equal(l.rename(f, &|_| None), r.rename(f, &|_| None)),
                GuardAtom::NotHeadedBy(t, s) => GuardAtom::NotHeadedBy(t.rename(f, &|_| None), s.clone()),
            })
            .collect()
    };
    let mut atoms = guard_atoms(r1, &ren1);
    atoms.extend(guard_atoms(r2, &ren2));
    for k in 1..=h1.len().min(h2.len()) {
        for s1 in combinations(h1.len(), k) {
            for s2 in combinations(h2.len(), k) {
                for s2p in permutations(&s2) {
                    let pairs: Vec<(usize, usize)> = s1.iter().copied().zip(s2p.iter().copied()).collect();
                    if i == j && k == h1.len() && pairs.iter().all(|(a, b)| a == b) {
                        // the same rule instance fired twice
                        continue;
                    }
                    if pairs.iter().any(|&(a, b)| h1[a].symbol != h2[b].symbol || h1[a].args.len() != h2[b].args.len()) {
                        continue;
                    }
                    if let Some(cp) = build(program, i, j, &h1, &h2, &pairs, &atoms) {
                        out.push(cp);
                    }
                }
            }
        }
    }
}

fn build(
    program: &Program,
    i: usize,
    j: usize,
    h1: &[Constraint],
    h2: &[Constraint],
    pairs: &[(usize, usize)],
    atoms: &[GuardAtom],
) -> Option<CriticalPair> {
    let (r1, r2) = (&program.rules[i], &program.rules[j]);
    let mut equations = Vec::new();
    for &(a, b) in pairs {
        equations.extend(h1[a].args.iter().cloned().zip(h2[b].args.iter().cloned()));
    }
    for atom in atoms {
        if let GuardAtom::Equal(l, r) = atom {
            equations.push((l.clone(), r.clone()));
        }
    }
    let theta = pattern_unify(UnifyProblem::new(equations).with_fresh("?u", 0)).ok()?.mgu;
    let guard = match guard_status(atoms, &theta) {
        None => GuardStatus::Unsatisfiable,
        Some(u) if u.is_empty() => GuardStatus::Entailed,
        Some(u) => GuardStatus::Undetermined(u),
    };

    // shared store: overlap first, then the rest of rule 1, then rule 2
    let in1: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    let in2: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
    let mut store = Vec::new();
    let mut id1 = vec![0; h1.len()];
    let mut id2 = vec![0; h2.len()];
    for &(a, b) in pairs {
        id1[a] = store.len();
        id2[b] = store.len();
        store.push((store.len(), theta.apply_constraint(&h1[a])));
    }
    for (a, c) in h1.iter().enumerate().filter(|(a, _)| !in1.contains(a)) {
        id1[a] = store.len();
        store.push((store.len(), theta.apply_constraint(c)));
    }
    for (b, c) in h2.iter().enumerate().filter(|(b, _)| !in2.contains(b)) {
        id2[b] = store.len();
        store.push((store.len(), theta.apply_constraint(c)));
    }
    let shared: Vec<Constraint> = store.iter().map(|(_, c)| c.clone()).collect();
    let mut origin = ExecutionState::initial(Vec::new());
    origin.globals = free_metavars(&shared);
    origin.globals.extend(theta.domain().cloned());
    origin.nominals = crate::term::support(&shared);
    origin.fresh.avoid(origin.globals.iter().chain(&origin.nominals));
    origin.fresh.next_id = store.len();
    origin.store = store;
    for (v, t) in theta.iter() {
        origin.builtins.subst.bind(v.clone(), t.clone());
    }
    if guard == GuardStatus::Unsatisfiable {
        origin.builtins.consistent = false;
    }

    // each side fires its own rule directly on the shared store
    let fire = |rule_index: usize, rule: &Rule, ids: &[usize], side: usize| -> Option<ExecutionState> {
        let ren = rename_rule(side);
        let mut matcher = Substitution::new();
        for v in rule.head_metas() {
            let local = ren(&v)?;
            matcher.insert_simultaneous(v, theta.apply(&Term::Meta(local)));
        }
        let cand = ApplyCandidate {
            rule: rule_index,
            kept: ids[..rule.kept.len()].to_vec(),
            removed: ids[rule.kept.len()..].to_vec(),
            theta: matcher,
        };
        let mut s = origin.clone();
        step_apply(&mut s, program, &cand).ok()?;
        Some(s)
    };
    let left = fire(i, r1, &id1, 1)?;
    let right = fire(j, r2, &id2, 2)?;
    Some(CriticalPair {
        rule1: r1.name.clone(),
        rule2: r2.name.clone(),
        overlap: Overlap { pairs: pairs.to_vec() },
        origin,
        left,
        right,
        guard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_constraint, parse_program};

    const FIG4: &str = include_str!("../../programs/higher_rank.chr");
    const TYPECLASS: &str = include_str!("../../programs/typeclass.chr");

    #[test]
    fn refl_and_skolemise_right() {
        let p = parse_program(FIG4).unwrap();
        let cps = critical_pairs(&p);
        let cp = cps.iter().find(|c| &*c.rule1 == "refl" && &*c.rule2 == "skol_r").expect("refl/skol_r pair");
        assert_eq!(cp.origin.store.len(), 1);
        assert_eq!(cp.origin.store[0].1, parse_constraint("leq(forall(?Q_2), forall(?Q_2))").unwrap());
        assert!(cp.left.goal.is_empty() && cp.left.store.is_empty());
        assert_eq!(cp.right.goal, vec![parse_constraint("leq(forall(?Q_2), (?Q_2 #n1))").unwrap()]);
        assert!(cp.right.nominals.contains("#n1"));
    }

    #[test]
    fn eq_int_overlaps_propagated_class() {
        let p = parse_program(TYPECLASS).unwrap();
        let cps = critical_pairs(&p);
        assert!(cps.iter().any(|c| &*c.rule1 == "ord_eq" && &*c.rule2 == "ord_int"));
        // eq_int and ord_eq share no head symbol
        assert!(!cps.iter().any(|c| &*c.rule1 == "ord_eq" && &*c.rule2 == "eq_int"));
    }

    #[test]
    fn disjoint_heads_give_nothing() {
        let p = parse_program("r @ c(a) <=> true.\ns @ d(X) <=> true.").unwrap();
        let cps = critical_pairs(&p);
        assert!(cps.is_empty());
    }

    #[test]
    fn guard_conflicts_are_flagged() {
        let p = parse_program(FIG4).unwrap();
        let cps = critical_pairs(&p);
        let cp = cps.iter().find(|c| &*c.rule1 == "inst_l" && &*c.rule2 == "skol_r").unwrap();
        assert_eq!(cp.guard, GuardStatus::Unsatisfiable);
        assert!(!cp.left.is_consistent() && !cp.right.is_consistent());
    }

    #[test]
    fn instantiation_substitutes_both_sides() {
        let p = parse_program(FIG4).unwrap();
        let cp = critical_pairs(&p).into_iter().find(|c| &*c.rule1 == "refl" && &*c.rule2 == "skol_r").unwrap();
        let q = crate::syntax::parse_term("\\X1. fn(X1, X1)").unwrap();
        let inst = cp.instantiate(&Substitution::singleton("?Q_2", q));
        assert_eq!(inst.right.goal, vec![parse_constraint("leq(forall(\\X1. fn(X1, X1)), fn(#n1, #n1))").unwrap()]);
    }
}
