//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use chr_nabla::term::{Name, Substitution, Term};
use chr_nabla::unify::{pattern_unify, UnifyFailure, UnifyProblem};

/// Bounds of the enumerated term universe over the signature `{a/0, f/2}`.
#[derive(Clone, Copy, Debug)]
pub struct Universe {
    pub depth: usize,
    pub binders: usize,
    /// Include the metavariables `X`, `Y` (bare) and `F` (applied to one
    /// bound variable).
    pub metas: bool,
}

/// Every term of the universe with `scope` bound variables in scope. Depth
/// counts `f` and `λ` nodes.
pub fn terms(u: Universe, scope: usize) -> Vec<Term> {
    fn go(depth: usize, scope: usize, binders: usize, metas: bool, out: &mut Vec<Term>) {
        out.push(Term::constant("a"));
        out.extend((0..scope).map(Term::Bound));
        if metas {
            out.push(Term::meta("X"));
            out.push(Term::meta("Y"));
            out.extend((0..scope).map(|i| Term::app(Term::meta("F"), Term::Bound(i))));
        }
        if depth == 0 {
            return;
        }
        let mut smaller = Vec::new();
        go(depth - 1, scope, binders, metas, &mut smaller);
        for x in &smaller {
            for y in &smaller {
                out.push(Term::ctor("f", vec![x.clone(), y.clone()]));
            }
        }
        if binders > 0 {
            let mut bodies = Vec::new();
            go(depth - 1, scope + 1, binders - 1, metas, &mut bodies);
            out.extend(bodies.into_iter().map(|b| Term::Lam("x".into(), Box::new(b))));
        }
    }
    let mut out = Vec::new();
    go(u.depth, scope, u.binders, u.metas, &mut out);
    out.sort_by_key(|t| format!("{t:?}"));
    out.dedup();
    out
}

fn metas_of(s: &Term, t: &Term) -> Vec<Name> {
    let mut ms = s.metas();
    ms.extend(t.metas());
    ms.into_iter().collect()
}

/// Candidate values for each metavariable: ground terms for `X` and `Y`,
/// `λx. b` for `F`.
pub struct Candidates {
    pub bare: Vec<Term>,
    pub unary: Vec<Term>,
}

impl Candidates {
    pub fn new(depth: usize) -> Self {
        let ground = Universe { depth, binders: 1, metas: false };
        let bare = terms(ground, 0);
        let unary = terms(Universe { depth: depth.saturating_sub(1), ..ground }, 1)
            .into_iter()
            .map(|b| Term::Lam("x".into(), Box::new(b)))
            .collect();
        Candidates { bare, unary }
    }

    fn for_meta(&self, m: &str) -> &[Term] {
        if m == "F" {
            &self.unary
        } else {
            &self.bare
        }
    }
}

const METAS: [&str; 3] = ["X", "Y", "F"];

/// Normal forms of one term under every assignment of candidates to the
/// metavariables it mentions, interned as integers.
struct Table {
    metas: Vec<usize>,
    ids: Vec<u32>,
}

/// Brute-force unifier search over a fixed candidate space, with every
/// term's instances precomputed.
pub struct BruteForce<'a> {
    cands: &'a Candidates,
    tables: Vec<Table>,
}

impl<'a> BruteForce<'a> {
    pub fn new(universe: &[Term], cands: &'a Candidates) -> Self {
        let mut intern: std::collections::HashMap<Term, u32> = std::collections::HashMap::new();
        let tables = universe
            .iter()
            .map(|t| {
                let ms = t.metas();
                let metas: Vec<usize> = (0..3).filter(|&i| ms.contains(METAS[i])).collect();
                let mut ids = Vec::new();
                for_each_assignment(&metas, cands, |a| {
                    let sigma = substitution(&metas, a, cands);
                    let n = intern.len() as u32;
                    ids.push(*intern.entry(sigma.apply(t)).or_insert(n));
                });
                Table { metas, ids }
            })
            .collect();
        BruteForce { cands, tables }
    }

    /// All candidate assignments unifying terms `i` and `j` of the universe,
    /// over the metavariables of the two terms.
    pub fn unifiers(&self, i: usize, j: usize) -> Vec<Substitution> {
        let (ti, tj) = (&self.tables[i], &self.tables[j]);
        let mut vars: Vec<usize> = ti.metas.iter().chain(&tj.metas).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let mut out = Vec::new();
        for_each_assignment(&vars, self.cands, |a| {
            if ti.ids[index(&ti.metas, a, self.cands)] == tj.ids[index(&tj.metas, a, self.cands)] {
                out.push(substitution(&vars, a, self.cands));
            }
        });
        out
    }
}

fn size(m: usize, cands: &Candidates) -> usize {
    cands.for_meta(METAS[m]).len()
}

fn index(metas: &[usize], a: &[usize; 3], cands: &Candidates) -> usize {
    metas.iter().fold(0, |acc, &m| acc * size(m, cands) + a[m])
}

fn substitution(metas: &[usize], a: &[usize; 3], cands: &Candidates) -> Substitution {
    let mut sigma = Substitution::new();
    for &m in metas {
        sigma.bind(METAS[m].into(), cands.for_meta(METAS[m])[a[m]].clone());
    }
    sigma
}

/// Visits assignments in the order used by `index`; metavariables outside
/// `metas` stay at 0.
fn for_each_assignment(metas: &[usize], cands: &Candidates, mut f: impl FnMut(&[usize; 3])) {
    let mut a = [0usize; 3];
    loop {
        f(&a);
        let mut k = metas.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            let m = metas[k];
            a[m] += 1;
            if a[m] < size(m, cands) {
                break;
            }
            a[m] = 0;
        }
    }
}

/// A ground instance of `mgu`: every remaining metavariable becomes `a`
/// under as many abstractions as it has arguments.
pub fn ground_instance(mgu: &Substitution, s: &Term, t: &Term) -> Substitution {
    let mut leftovers = std::collections::BTreeMap::new();
    for v in metas_of(&mgu.apply(s), &mgu.apply(t)) {
        leftovers.insert(v, 0usize);
    }
    fn arities(t: &Term, out: &mut std::collections::BTreeMap<Name, usize>) {
        let (h, args) = t.spine();
        if let Term::Meta(m) = h {
            let e = out.entry(m.clone()).or_insert(0);
            *e = (*e).max(args.len());
        }
        match t {
            Term::Ctor(_, xs) => xs.iter().for_each(|x| arities(x, out)),
            Term::Lam(_, b) => arities(b, out),
            Term::App(f, a) => {
                arities(f, out);
                arities(a, out);
            }
            _ => {}
        }
    }
    arities(&mgu.apply(s), &mut leftovers);
    arities(&mgu.apply(t), &mut leftovers);
    let mut tau = Substitution::new();
    for (v, k) in leftovers {
        let body = (0..k).fold(Term::constant("a"), |b, _| Term::Lam("x".into(), Box::new(b)));
        tau.bind(v, body);
    }
    let mut sigma = Substitution::new();
    for v in metas_of(s, t) {
        sigma.bind(v.clone(), tau.apply(&mgu.apply(&Term::Meta(v))));
    }
    sigma
}

/// True if `sigma` is an instance of `mgu` on the variables of the problem,
/// i.e. `sigma = τ ∘ mgu` for some τ.
pub fn factors_through(sigma: &Substitution, mgu: &Substitution, vars: &[Name]) -> bool {
    let eqs: Vec<(Term, Term)> = vars
        .iter()
        .map(|v| (mgu.apply(&Term::Meta(v.clone())), sigma.apply(&Term::Meta(v.clone()))))
        .collect();
    pattern_unify(UnifyProblem::new(eqs).with_fresh("?f", 1)).is_ok()
}

#[derive(Debug, Default)]
pub struct OracleStats {
    pub problems: usize,
    pub solvable: usize,
    pub brute_unifiers: usize,
    pub disagreements: Vec<String>,
}

/// Compares `pattern_unify` with the brute-force search on every pair
/// `(s, t)` with `s` before `t` in `universe`.
pub fn compare_with_brute_force(universe: &[Term], cands: &Candidates) -> OracleStats {
    let brute_force = BruteForce::new(universe, cands);
    let mut st = OracleStats::default();
    for (i, s) in universe.iter().enumerate() {
        for (j, t) in universe.iter().enumerate().skip(i) {
            st.problems += 1;
            let vars = metas_of(s, t);
            let brute = brute_force.unifiers(i, j);
            st.brute_unifiers += brute.len();
            match pattern_unify(UnifyProblem::new(vec![(s.clone(), t.clone())])) {
                Ok(u) => {
                    st.solvable += 1;
                    let g = ground_instance(&u.mgu, s, t);
                    if g.apply(s) != g.apply(t) {
                        st.disagreements.push(format!("{s} = {t}: mgu {:?} has non-unifying instance", u.mgu));
                    }
                    if let Some(b) = brute.iter().find(|b| !factors_through(b, &u.mgu, &vars)) {
                        st.disagreements.push(format!("{s} = {t}: {b:?} is not an instance of {:?}", u.mgu));
                    }
                }
                Err(UnifyFailure::Clash | UnifyFailure::Occurs) => {
                    if let Some(b) = brute.first() {
                        st.disagreements.push(format!("{s} = {t}: reported unsolvable but {b:?} unifies"));
                    }
                }
                Err(e) => st.disagreements.push(format!("{s} = {t}: unexpected failure {e}")),
            }
        }
    }
    st
}
