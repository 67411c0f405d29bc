use proptest::prelude::*;

use chr_nabla::analysis::variant::is_variant;
use chr_nabla::engine::{step_introduce, ExecutionState};
use chr_nabla::syntax::{parse_constraint, parse_program, parse_term};
use chr_nabla::term::{alpha_equal, beta0_normalize, is_pattern, Constraint, Permutation, Term};
use chr_nabla::typeinfer::{parse_expr, parse_type};
use chr_nabla::unify::unify;

#[derive(Clone, Debug)]
enum Raw {
    Var(usize),
    Nom(usize),
    Meta(usize),
    Ctor(usize, Vec<Raw>),
    Lam(Box<Raw>),
    Flex(usize, Vec<usize>),
}

fn raw() -> impl Strategy<Value = Raw> {
    let leaf = prop_oneof![
        (0..3usize).prop_map(Raw::Var),
        (0..3usize).prop_map(Raw::Nom),
        (0..3usize).prop_map(Raw::Meta),
        (0..3usize, prop::collection::vec(0..3usize, 0..3)).prop_map(|(m, xs)| Raw::Flex(m, xs)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (0..3usize, prop::collection::vec(inner.clone(), 2)).prop_map(|(f, xs)| Raw::Ctor(f, xs)),
            inner.prop_map(|b| Raw::Lam(Box::new(b))),
        ]
    })
}

const METAS: [&str; 3] = ["X", "Y", "Z"];
const NOMINALS: [&str; 3] = ["#a", "#b", "#c"];

/// Builds a term in the pattern fragment; bound references are taken
/// modulo the number of enclosing binders.
fn build(r: &Raw, scope: usize) -> Term {
    match r {
        Raw::Var(i) if scope > 0 => Term::Bound(i % scope),
        Raw::Var(_) => Term::constant("a"),
        Raw::Nom(i) => Term::nominal(NOMINALS[*i]),
        Raw::Meta(i) => Term::meta(METAS[*i]),
        Raw::Ctor(f, xs) => match f {
            0 => Term::constant("a"),
            1 => Term::ctor("f", xs.iter().map(|x| build(x, scope)).collect()),
            _ => Term::ctor("g", vec![build(&xs[0], scope)]),
        },
        Raw::Lam(b) => Term::Lam(format!("x{scope}").into(), Box::new(build(b, scope + 1))),
        Raw::Flex(m, xs) => {
            let mut args: Vec<usize> = Vec::new();
            if scope > 0 {
                for x in xs {
                    let i = x % scope;
                    if !args.contains(&i) {
                        args.push(i);
                    }
                }
            }
            Term::apply_all(Term::meta(&format!("F{m}")), args.into_iter().map(Term::Bound))
        }
    }
}

fn term() -> impl Strategy<Value = Term> {
    raw().prop_map(|r| beta0_normalize(&build(&r, 0)))
}

fn state(cs: &[Constraint]) -> ExecutionState {
    let mut s = ExecutionState::initial(cs.to_vec());
    s.globals.clear();
    while !s.goal.is_empty() {
        step_introduce(&mut s, 0).unwrap();
    }
    s
}

proptest! {
    #[test]
    fn normal_forms_are_stable(t in term()) {
        prop_assert!(is_pattern(&t));
        prop_assert_eq!(beta0_normalize(&t), t);
    }

    #[test]
    fn printed_terms_parse_back(t in term()) {
        let back = parse_term(&t.to_string()).unwrap();
        prop_assert!(alpha_equal(&back, &t), "{} reparsed as {}", t, back);
    }

    #[test]
    fn mgu_is_a_unifier(s in term(), t in term()) {
        if let Ok(u) = unify(&s, &t) {
            let (ls, rs) = (u.mgu.apply(&s), u.mgu.apply(&t));
            prop_assert!(alpha_equal(&ls, &rs), "{} vs {} under {}", ls, rs, u.mgu);
            prop_assert_eq!(u.mgu.apply(&ls), ls.clone(), "mgu not idempotent");
        }
    }

    #[test]
    fn unifiability_is_symmetric(s in term(), t in term()) {
        prop_assert_eq!(unify(&s, &t).is_ok(), unify(&t, &s).is_ok());
    }

    #[test]
    fn terms_unify_with_themselves(t in term()) {
        let u = unify(&t, &t).unwrap();
        prop_assert!(u.mgu.is_empty(), "{}", u.mgu);
    }

    #[test]
    fn swaps_are_involutions(t in term(), a in 0..3usize, b in 0..3usize) {
        let pi = Permutation::swap(NOMINALS[a], NOMINALS[b]);
        prop_assert_eq!(pi.apply(&pi.apply(&t)), t.clone());
        prop_assert_eq!(pi.apply(&t).count_nominals(), t.count_nominals());
    }

    #[test]
    fn variance_is_symmetric(xs in prop::collection::vec(term(), 1..3), ys in prop::collection::vec(term(), 1..3)) {
        let c = |ts: Vec<Term>| ts.into_iter().map(|t| Constraint::new("c", vec![t])).collect::<Vec<_>>();
        let (s1, s2) = (state(&c(xs)), state(&c(ys)));
        prop_assert!(is_variant(&s1, &s1).is_variant());
        prop_assert_eq!(is_variant(&s1, &s2).is_variant(), is_variant(&s2, &s1).is_variant());
    }

    #[test]
    fn permuted_states_are_variants(xs in prop::collection::vec(term(), 1..3), a in 0..3usize, b in 0..3usize) {
        let pi = Permutation::swap(NOMINALS[a], NOMINALS[b]);
        let cs: Vec<Constraint> = xs.into_iter().map(|t| Constraint::new("c", vec![t])).collect();
        let moved: Vec<Constraint> = cs.iter().rev().map(|c| pi.apply_constraint(c)).collect();
        prop_assert!(is_variant(&state(&cs), &state(&moved)).is_variant());
    }
}

#[test]
fn printed_programs_parse_back() {
    for src in [
        include_str!("../programs/typeclass.chr"),
        include_str!("../programs/higher_rank.chr"),
        include_str!("../programs/fresh_loop.chr"),
        include_str!("../programs/not_joinable.chr"),
    ] {
        let once = parse_program(src).unwrap().to_string();
        let twice = parse_program(&once).unwrap().to_string();
        assert_eq!(once, twice);
    }
}

#[test]
fn printed_constraints_parse_back() {
    for src in ["leq(forall(\\A. fn(A, A)), fn(S, T))", "c(#a, \\x. (F x))", "X = f(a, #b)"] {
        let c = parse_constraint(src).unwrap();
        assert_eq!(parse_constraint(&c.to_string()).unwrap(), c);
    }
}

#[test]
fn printed_expressions_parse_back() {
    for src in ["\\(f : forall a. a -> a). f 3", "id (const 1) 2", "\\x. \\y. x"] {
        let e = parse_expr(src).unwrap();
        assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }
    for src in ["forall a b. (a -> b) -> List a -> List b", "Int -> (forall a. a) -> Int"] {
        let t = parse_type(src).unwrap();
        assert_eq!(parse_type(&t.to_string()).unwrap(), t);
    }
}

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), std::fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn fuzz_seeds_parse_and_round_trip() {
    for (path, src) in seeds("parse_term") {
        let t = parse_term(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
        assert!(alpha_equal(&parse_term(&t.to_string()).unwrap(), &t), "{path}");
    }
    for (path, src) in seeds("parse_program") {
        let p = parse_program(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
        assert_eq!(parse_program(&p.to_string()).unwrap().to_string(), p.to_string(), "{path}");
    }
    for (path, src) in seeds("parse_goals") {
        chr_nabla::syntax::parse_goals(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
    }
    for (path, src) in seeds("parse_expr") {
        let e = parse_expr(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
        assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{path}");
    }
    for (path, src) in seeds("parse_type") {
        let t = parse_type(&src).unwrap_or_else(|e| panic!("{path}: {e}"));
        assert_eq!(parse_type(&t.to_string()).unwrap(), t, "{path}");
    }
}
