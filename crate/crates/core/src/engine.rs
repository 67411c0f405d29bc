//! Execution states and the Solve / Introduce / Apply transitions, plus the
//! drivers that pick transitions: a fixed deterministic order, a seeded
//! random choice, and exhaustive exploration over rule applications.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rules::{Program, Rule};
use crate::term::{free_metavars, support, Constraint, Name, Substitution, Term, EQ};
use crate::unify::{entails, match_heads, pattern_unify, UnifyFailure, UnifyProblem};

/// Built-in constraints in solved form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinStore {
    pub subst: Substitution,
    pub consistent: bool,
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore { subst: Substitution::new(), consistent: true }
    }
}

/// Propagation-history entry `⟨id(H₁), id(H₂), r⟩`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub kept_ids: Vec<usize>,
    pub removed_ids: Vec<usize>,
    pub rule: Name,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreshSupply {
    pub next_nominal: usize,
    pub next_metavar: usize,
    pub next_id: usize,
}

impl Default for FreshSupply {
    fn default() -> Self {
        FreshSupply { next_nominal: 1, next_metavar: 1, next_id: 0 }
    }
}

pub const FRESH_NOMINAL_PREFIX: &str = "#n";
pub const FRESH_META_PREFIX: &str = "?m";

impl FreshSupply {
    pub fn nominal(&mut self) -> Name {
        let n = format!("{FRESH_NOMINAL_PREFIX}{}", self.next_nominal);
        self.next_nominal += 1;
        n.into()
    }

    pub fn metavar(&mut self) -> Name {
        let n = format!("{FRESH_META_PREFIX}{}", self.next_metavar);
        self.next_metavar += 1;
        n.into()
    }

    pub fn id(&mut self) -> usize {
        self.next_id += 1;
        self.next_id - 1
    }

    /// Moves the counters past every generated-looking name in `names`.
    pub fn avoid<'a>(&mut self, names: impl IntoIterator<Item = &'a Name>) {
        for n in names {
            let bump = |prefix: &str, slot: &mut usize| {
                if let Some(Ok(k)) = n.strip_prefix(prefix).map(str::parse::<usize>) {
                    *slot = (*slot).max(k + 1);
                }
            };
            bump(FRESH_NOMINAL_PREFIX, &mut self.next_nominal);
            bump(FRESH_META_PREFIX, &mut self.next_metavar);
        }
    }
}

/// `⟨G, S, B, T, 𝒩⟩`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionState {
    pub goal: Vec<Constraint>,
    pub store: Vec<(usize, Constraint)>,
    pub builtins: BuiltinStore,
    pub history: BTreeSet<Token>,
    pub nominals: BTreeSet<Name>,
    pub fresh: FreshSupply,
    /// Variables of the initial state. Everything else is local to the run
    /// and existentially quantified when states are compared.
    pub globals: BTreeSet<Name>,
}

impl ExecutionState {
    /// Initial state for a goal: empty store, history and nominal set.
    pub fn initial(goal: Vec<Constraint>) -> Self {
        let mut fresh = FreshSupply::default();
        let globals = free_metavars(&goal);
        let nominals = support(&goal);
        fresh.avoid(globals.iter().chain(&nominals));
        let goal = goal.iter().map(Constraint::normalized).collect();
        ExecutionState {
            goal,
            store: Vec::new(),
            builtins: BuiltinStore::default(),
            history: BTreeSet::new(),
            nominals,
            fresh,
            globals,
        }
    }

    pub fn store_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.store.iter().map(|(_, c)| c)
    }

    pub fn is_consistent(&self) -> bool {
        self.builtins.consistent
    }

    fn zonk(&mut self) {
        let s = &self.builtins.subst;
        if s.is_empty() {
            return;
        }
        for c in &mut self.goal {
            *c = s.apply_constraint(c);
        }
        for (_, c) in &mut self.store {
            *c = s.apply_constraint(c);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("equation `{0}` is outside the pattern fragment")]
    NonPattern(Constraint),
    #[error("unification fuel exhausted on `{0}`")]
    UnifyFuel(Constraint),
    #[error("no transition with that index")]
    BadTransition,
}

/// A rule instance ready to fire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApplyCandidate {
    pub rule: usize,
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub theta: Substitution,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    /// Index into the goal.
    Solve(usize),
    /// Index into the goal.
    Introduce(usize),
    Apply(ApplyCandidate),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Solve {
        constraint: Constraint,
        /// Most general unifier added to the built-in store.
        bindings: Substitution,
        consistent: bool,
    },
    Introduce {
        id: usize,
        constraint: Constraint,
    },
    Apply {
        rule: Name,
        kept: Vec<usize>,
        removed: Vec<usize>,
        /// Matching substitution over the rule's head variables.
        bindings: Substitution,
        fresh_nominals: Vec<Name>,
        fresh_vars: Vec<Name>,
        /// Store contents matched by the heads, kept first.
        heads: Vec<Constraint>,
        body: Vec<Constraint>,
    },
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::Solve { .. } => "solve",
            TraceEvent::Introduce { .. } => "introduce",
            TraceEvent::Apply { .. } => "apply",
        }
    }

    pub fn rule(&self) -> Option<&Name> {
        match self {
            TraceEvent::Apply { rule, .. } => Some(rule),
            _ => None,
        }
    }
}

fn join<T: fmt::Display>(xs: &[T], sep: &str) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Solve { constraint, bindings, consistent } => {
                write!(f, "solve {constraint}")?;
                if *consistent {
                    write!(f, " => {bindings}")
                } else {
                    write!(f, " => inconsistent")
                }
            }
            TraceEvent::Introduce { id, constraint } => write!(f, "introduce #{id} {constraint}"),
            TraceEvent::Apply { rule, kept, removed, bindings, fresh_nominals, fresh_vars, body, .. } => {
                write!(f, "apply {rule} kept [{}] removed [{}] {bindings}", join(kept, ", "), join(removed, ", "))?;
                let fresh: Vec<&Name> = fresh_nominals.iter().chain(fresh_vars).collect();
                if !fresh.is_empty() {
                    write!(f, " fresh {}", join(&fresh, " "))?;
                }
                if body.is_empty() {
                    write!(f, " => true")
                } else {
                    write!(f, " => {}", join(body, ", "))
                }
            }
        }
    }
}

fn rule_heads(rule: &Rule) -> Vec<Constraint> {
    rule.kept.iter().chain(&rule.removed).cloned().collect()
}

/// Every rule instance that may fire, in program order and then in
/// lexicographic order of the matched store positions.
pub fn applicable_transitions(state: &ExecutionState, program: &Program) -> Vec<ApplyCandidate> {
    let mut out = Vec::new();
    if !state.is_consistent() {
        return out;
    }
    for (ri, rule) in program.rules.iter().enumerate() {
        let heads = rule_heads(rule);
        let options: Vec<Vec<usize>> = heads
            .iter()
            .map(|h| {
                (0..state.store.len())
                    .filter(|&k| {
                        let c = &state.store[k].1;
                        c.symbol == h.symbol && c.args.len() == h.args.len()
                    })
                    .collect()
            })
            .collect();
        let mut chosen = Vec::with_capacity(heads.len());
        enumerate_assignments(&options, &mut chosen, &mut |positions| {
            let candidates: Vec<Constraint> = positions.iter().map(|&k| state.store[k].1.clone()).collect();
            for theta in match_heads(&heads, &candidates) {
                if !entails(&state.builtins, &rule.guard, &theta) {
                    continue;
                }
                let ids: Vec<usize> = positions.iter().map(|&k| state.store[k].0).collect();
                let (kept, removed) = ids.split_at(rule.kept.len());
                let token = Token { kept_ids: kept.to_vec(), removed_ids: removed.to_vec(), rule: rule.name.clone() };
                if state.history.contains(&token) {
                    continue;
                }
                out.push(ApplyCandidate { rule: ri, kept: kept.to_vec(), removed: removed.to_vec(), theta });
            }
        });
    }
    out
}

fn enumerate_assignments(options: &[Vec<usize>], chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == options.len() {
        visit(chosen);
        return;
    }
    for &k in &options[chosen.len()] {
        if chosen.contains(&k) {
            continue;
        }
        chosen.push(k);
        enumerate_assignments(options, chosen, visit);
        chosen.pop();
    }
}

/// Every enabled transition. Empty for an inconsistent state.
pub fn enabled_transitions(state: &ExecutionState, program: &Program) -> Vec<Transition> {
    if !state.is_consistent() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, c) in state.goal.iter().enumerate() {
        if program.is_builtin(&c.symbol) {
            out.push(Transition::Solve(i));
        } else {
            out.push(Transition::Introduce(i));
        }
    }
    out.extend(applicable_transitions(state, program).into_iter().map(Transition::Apply));
    out
}

/// Moves a built-in goal into the built-in store.
pub fn step_solve(state: &mut ExecutionState, index: usize) -> Result<TraceEvent, EngineError> {
    if index >= state.goal.len() {
        return Err(EngineError::BadTransition);
    }
    let c = state.goal.remove(index);
    let c = state.builtins.subst.apply_constraint(&c);
    if &*c.symbol != EQ {
        return Ok(TraceEvent::Solve { constraint: c, bindings: Substitution::new(), consistent: true });
    }
    let problem = UnifyProblem::new(vec![(c.args[0].clone(), c.args[1].clone())])
        .with_fresh(FRESH_META_PREFIX, state.fresh.next_metavar);
    match pattern_unify(problem) {
        Ok(u) => {
            state.fresh.next_metavar = state.fresh.next_metavar.max(u.next_fresh);
            for (v, t) in u.mgu.iter() {
                state.builtins.subst.bind(v.clone(), t.clone());
            }
            state.zonk();
            Ok(TraceEvent::Solve { constraint: c, bindings: u.mgu, consistent: true })
        }
        Err(UnifyFailure::Clash | UnifyFailure::Occurs) => {
            state.builtins.consistent = false;
            Ok(TraceEvent::Solve { constraint: c, bindings: Substitution::new(), consistent: false })
        }
        Err(UnifyFailure::NonPattern) => Err(EngineError::NonPattern(c)),
        Err(UnifyFailure::OutOfFuel) => Err(EngineError::UnifyFuel(c)),
    }
}

/// Moves a non-built-in goal into the store under a fresh identifier.
pub fn step_introduce(state: &mut ExecutionState, index: usize) -> Result<TraceEvent, EngineError> {
    if index >= state.goal.len() {
        return Err(EngineError::BadTransition);
    }
    let c = state.goal.remove(index);
    let id = state.fresh.id();
    state.store.push((id, c.clone()));
    Ok(TraceEvent::Introduce { id, constraint: c })
}

/// Fires a rule instance. Body constraints are placed at the front of the
/// goal, in body order.
pub fn step_apply(state: &mut ExecutionState, program: &Program, cand: &ApplyCandidate) -> Result<TraceEvent, EngineError> {
    let rule = program.rules.get(cand.rule).ok_or(EngineError::BadTransition)?;
    let lookup = |id: &usize| state.store.iter().find(|(i, _)| i == id).map(|(_, c)| c.clone());
    let heads: Vec<Constraint> =
        cand.kept.iter().chain(&cand.removed).map(lookup).collect::<Option<_>>().ok_or(EngineError::BadTransition)?;
    let mut sigma = cand.theta.clone();
    let mut fresh_nominals = Vec::new();
    for x in &rule.nabla_vars {
        let n = state.fresh.nominal();
        sigma.insert_simultaneous(x.clone(), Term::Nominal(n.clone()));
        fresh_nominals.push(n);
    }
    let mut fresh_vars = Vec::new();
    for y in &rule.exists_vars {
        let m = state.fresh.metavar();
        sigma.insert_simultaneous(y.clone(), Term::Meta(m.clone()));
        fresh_vars.push(m);
    }
    let body: Vec<Constraint> = rule.body.iter().map(|c| sigma.apply_constraint(c)).collect();
    state.store.retain(|(id, _)| !cand.removed.contains(id));
    state.history.insert(Token { kept_ids: cand.kept.clone(), removed_ids: cand.removed.clone(), rule: rule.name.clone() });
    state.nominals.extend(fresh_nominals.iter().cloned());
    state.goal.splice(0..0, body.iter().cloned());
    Ok(TraceEvent::Apply {
        rule: rule.name.clone(),
        kept: cand.kept.clone(),
        removed: cand.removed.clone(),
        bindings: cand.theta.clone(),
        fresh_nominals,
        fresh_vars,
        heads,
        body,
    })
}

pub fn step(state: &mut ExecutionState, program: &Program, t: &Transition) -> Result<TraceEvent, EngineError> {
    match t {
        Transition::Solve(i) => step_solve(state, *i),
        Transition::Introduce(i) => step_introduce(state, *i),
        Transition::Apply(c) => step_apply(state, program, c),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Solve, then Apply (first rule in program order, lowest store
    /// positions), then Introduce the first goal.
    Deterministic,
    /// Uniform choice among all enabled transitions.
    Random { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunResult {
    Final,
    Failed,
    OutOfFuel,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub result: RunResult,
    pub state: ExecutionState,
    pub trace: Vec<TraceEvent>,
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("{error} (after {} transitions)", trace.len())]
pub struct RunError {
    pub error: EngineError,
    pub state: Box<ExecutionState>,
    pub trace: Vec<TraceEvent>,
}

fn deterministic_choice(state: &ExecutionState, program: &Program) -> Option<Transition> {
    if !state.is_consistent() {
        return None;
    }
    if let Some(i) = state.goal.iter().position(|c| program.is_builtin(&c.symbol)) {
        return Some(Transition::Solve(i));
    }
    if let Some(c) = applicable_transitions(state, program).into_iter().next() {
        return Some(Transition::Apply(c));
    }
    (!state.goal.is_empty()).then_some(Transition::Introduce(0))
}

/// Runs until no transition applies, the built-ins become inconsistent or
/// `fuel` transitions have been taken.
pub fn run(initial: ExecutionState, program: &Program, strategy: Strategy, fuel: usize) -> Result<Run, RunError> {
    let mut state = initial;
    let mut trace = Vec::new();
    let mut rng = match strategy {
        Strategy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::Deterministic => None,
    };
    loop {
        if !state.is_consistent() {
            return Ok(Run { result: RunResult::Failed, state, trace });
        }
        let next = match &mut rng {
            None => deterministic_choice(&state, program),
            Some(rng) => enabled_transitions(&state, program).choose(rng).cloned(),
        };
        let Some(t) = next else {
            return Ok(Run { result: RunResult::Final, state, trace });
        };
        if trace.len() >= fuel {
            return Ok(Run { result: RunResult::OutOfFuel, state, trace });
        }
        match step(&mut state, program, &t) {
            Ok(ev) => trace.push(ev),
            Err(error) => return Err(RunError { error, state: Box::new(state), trace }),
        }
    }
}

/// A state reached during exploration together with the path to it.
#[derive(Clone, Debug)]
pub struct Node {
    pub state: ExecutionState,
    pub trace: Vec<TraceEvent>,
    /// No transition is enabled (or the built-ins are inconsistent).
    pub terminal: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub nodes: Vec<Node>,
    /// Some node still had rule applications left when a limit was hit.
    pub truncated: bool,
    pub errors: Vec<EngineError>,
}

impl Exploration {
    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.terminal)
    }

    /// Every path was followed to a terminal state without errors.
    pub fn is_closed(&self) -> bool {
        !self.truncated && self.errors.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreLimits {
    /// Maximum rule applications along one path.
    pub depth: usize,
    pub max_nodes: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { depth: 64, max_nodes: 20_000 }
    }
}

/// Solve and Introduce steps do not disable any rule instance, so they are
/// taken eagerly: pending built-ins first, then goals in order.
fn saturate(node: &mut Node, program: &Program) -> Result<(), EngineError> {
    while node.state.is_consistent() {
        let t = if let Some(i) = node.state.goal.iter().position(|c| program.is_builtin(&c.symbol)) {
            Transition::Solve(i)
        } else if !node.state.goal.is_empty() {
            Transition::Introduce(0)
        } else {
            break;
        };
        let ev = step(&mut node.state, program, &t)?;
        node.trace.push(ev);
    }
    Ok(())
}

/// Explores every sequence of rule applications from `initial`. All
/// reachable intermediate states are returned, not only the leaves.
pub fn explore(initial: ExecutionState, program: &Program, limits: ExploreLimits) -> Exploration {
    let mut out = Exploration::default();
    let start = Node { state: initial, trace: Vec::new(), terminal: false };
    if !start.state.goal.is_empty() {
        // the start state is reachable even before saturation
        out.nodes.push(start.clone());
    }
    let mut stack = vec![(start, 0usize)];
    while let Some((mut node, depth)) = stack.pop() {
        if let Err(e) = saturate(&mut node, program) {
            out.errors.push(e);
            continue;
        }
        let cands = applicable_transitions(&node.state, program);
        node.terminal = cands.is_empty();
        if out.nodes.len() >= limits.max_nodes {
            out.truncated = true;
            break;
        }
        if !node.terminal && depth >= limits.depth {
            out.truncated = true;
        }
        let expand = !node.terminal && depth < limits.depth;
        out.nodes.push(node.clone());
        if !expand {
            continue;
        }
        for cand in cands.into_iter().rev() {
            let mut child = Node { state: node.state.clone(), trace: node.trace.clone(), terminal: false };
            match step_apply(&mut child.state, program, &cand) {
                Ok(ev) => child.trace.push(ev),
                Err(e) => {
                    out.errors.push(e);
                    continue;
                }
            }
            stack.push((child, depth + 1));
        }
    }
    out
}

fn fmt_constraints(cs: &[Constraint]) -> String {
    if cs.is_empty() {
        "(empty)".into()
    } else {
        join(cs, ", ")
    }
}

impl fmt::Display for ExecutionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal:     {}", fmt_constraints(&self.goal))?;
        let store: Vec<String> = self.store.iter().map(|(i, c)| format!("{c}#{i}")).collect();
        writeln!(f, "store:    {}", if store.is_empty() { "(empty)".into() } else { store.join(", ") })?;
        if self.builtins.consistent {
            writeln!(f, "builtins: {}", self.builtins.subst)?;
        } else {
            writeln!(f, "builtins: inconsistent")?;
        }
        let noms: Vec<&Name> = self.nominals.iter().collect();
        write!(f, "nominals: {{{}}}", join(&noms, ", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_constraint, parse_goals, parse_program};

    const FIG4: &str = include_str!("../programs/higher_rank.chr");
    const TYPECLASS: &str = include_str!("../programs/typeclass.chr");

    fn c(s: &str) -> Constraint {
        parse_constraint(s).unwrap()
    }

    fn state_with_store(cs: &[&str]) -> ExecutionState {
        let mut s = ExecutionState::initial(cs.iter().map(|x| c(x)).collect());
        while !s.goal.is_empty() {
            step_introduce(&mut s, 0).unwrap();
        }
        s
    }

    #[test]
    fn solve_binds_and_zonks() {
        let mut s = ExecutionState::initial(vec![c("R = fn(S, T)"), c("leq(R, R)")]);
        let ev = step_solve(&mut s, 0).unwrap();
        assert!(matches!(ev, TraceEvent::Solve { consistent: true, .. }));
        assert_eq!(s.builtins.subst.get("R"), Some(&crate::syntax::parse_term("fn(S, T)").unwrap()));
        assert_eq!(s.goal, vec![c("leq(fn(S, T), fn(S, T))")]);
    }

    #[test]
    fn solve_clash_and_truth() {
        let mut s = ExecutionState::initial(vec![c("con(\"Int\", []) = con(\"Bool\", [])")]);
        step_solve(&mut s, 0).unwrap();
        assert!(!s.is_consistent());
        let mut s = ExecutionState::initial(vec![Constraint::truth()]);
        step_solve(&mut s, 0).unwrap();
        assert!(s.goal.is_empty() && s.is_consistent());
    }

    #[test]
    fn solve_rejects_non_patterns() {
        let mut s = ExecutionState::initial(vec![]);
        s.goal.push(c("(F #a) = b"));
        assert!(matches!(step_solve(&mut s, 0), Err(EngineError::NonPattern(_))));
    }

    #[test]
    fn introduce_allocates_ids() {
        let s = state_with_store(&["leq(X, Y)", "leq(X, Y)"]);
        assert_eq!(s.store.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn inst_left_candidate_only() {
        let p = parse_program(FIG4).unwrap();
        let s = state_with_store(&["leq(forall(\\A. fn(A, A)), fn(S, T))"]);
        let names: Vec<&str> = applicable_transitions(&s, &p).iter().map(|c| &*p.rules[c.rule].name).collect();
        assert_eq!(names, vec!["inst_l"]);
    }

    #[test]
    fn inst_left_fires_with_fresh_variable() {
        let p = parse_program(FIG4).unwrap();
        let mut s = state_with_store(&["leq(forall(\\A. fn(A, A)), fn(S, T))"]);
        let cand = applicable_transitions(&s, &p).remove(0);
        step_apply(&mut s, &p, &cand).unwrap();
        assert_eq!(s.goal, vec![c("leq(fn(?m1, ?m1), fn(S, T))")]);
        assert!(s.store.is_empty());
    }

    #[test]
    fn skolemise_right_introduces_nominal() {
        let p = parse_program(FIG4).unwrap();
        let mut s = state_with_store(&["leq(T1, forall(\\A. c(A)))"]);
        let cand = applicable_transitions(&s, &p).remove(0);
        assert_eq!(&*p.rules[cand.rule].name, "skol_r");
        step_apply(&mut s, &p, &cand).unwrap();
        assert_eq!(s.goal, vec![c("leq(T1, c(#n1))")]);
        assert!(s.nominals.contains("#n1"));
    }

    #[test]
    fn propagation_fires_once() {
        let p = parse_program(TYPECLASS).unwrap();
        let mut s = state_with_store(&["ord(A)"]);
        let cands = applicable_transitions(&s, &p);
        assert_eq!(cands.len(), 1);
        step_apply(&mut s, &p, &cands[0]).unwrap();
        assert_eq!(s.goal, vec![c("eq_c(A)")]);
        assert_eq!(s.store.len(), 1);
        assert!(applicable_transitions(&s, &p).is_empty());
    }

    #[test]
    fn list_instance_is_the_only_candidate() {
        let p = parse_program(TYPECLASS).unwrap();
        let s = state_with_store(&["ord_list(A)"]);
        assert!(applicable_transitions(&s, &p).is_empty());
        let s = state_with_store(&["ord([A])"]);
        let simpl: Vec<&str> = applicable_transitions(&s, &p)
            .iter()
            .map(|c| &*p.rules[c.rule].name)
            .filter(|n| *n != "ord_eq")
            .collect();
        assert_eq!(simpl, vec!["ord_list"]);
    }

    #[test]
    fn empty_goal_is_final() {
        let p = parse_program(FIG4).unwrap();
        let r = run(ExecutionState::initial(vec![]), &p, Strategy::Deterministic, 0).unwrap();
        assert_eq!(r.result, RunResult::Final);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn fuel_zero_runs_out() {
        let p = parse_program(FIG4).unwrap();
        let r = run(ExecutionState::initial(vec![c("leq(X, Y)")]), &p, Strategy::Deterministic, 0).unwrap();
        assert_eq!(r.result, RunResult::OutOfFuel);
    }

    #[test]
    fn failed_run_ends_with_clash() {
        let p = parse_program(FIG4).unwrap();
        let g = parse_goals("leq(con(\"Int\", []), fn(A, B)).").unwrap();
        let r = run(ExecutionState::initial(g), &p, Strategy::Deterministic, 100).unwrap();
        assert_eq!(r.result, RunResult::Failed);
        assert!(matches!(r.trace.last(), Some(TraceEvent::Solve { consistent: false, .. })));
    }

    #[test]
    fn walkthrough_assigns_every_variable() {
        let p = parse_program(FIG4).unwrap();
        let g = parse_goals("leq(forall(\\A. fn(A, A)), fn(S, T)).\nleq(con(\"Int\", []), S).").unwrap();
        let r = run(ExecutionState::initial(g), &p, Strategy::Deterministic, 100).unwrap();
        assert_eq!(r.result, RunResult::Final);
        let int = crate::syntax::parse_term("con(\"Int\", [])").unwrap();
        assert_eq!(r.state.builtins.subst.get("T"), Some(&int));
        assert_eq!(r.state.builtins.subst.get("S"), Some(&int));
        assert!(r.state.store.is_empty());
    }

    #[test]
    fn random_runs_are_reproducible() {
        let p = parse_program(TYPECLASS).unwrap();
        let g = parse_goals("ord([A]).").unwrap();
        let a = run(ExecutionState::initial(g.clone()), &p, Strategy::Random { seed: 7 }, 100).unwrap();
        let b = run(ExecutionState::initial(g), &p, Strategy::Random { seed: 7 }, 100).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn exploration_reaches_every_leaf() {
        let p = parse_program(TYPECLASS).unwrap();
        let g = parse_goals("ord([A]).").unwrap();
        let e = explore(ExecutionState::initial(g), &p, ExploreLimits::default());
        assert!(e.is_closed());
        for leaf in e.leaves() {
            let mut store: Vec<String> = leaf.state.store_constraints().map(ToString::to_string).collect();
            store.sort();
            assert_eq!(store, vec!["eq_c(A)", "ord(A)"]);
        }
    }

    #[test]
    fn fresh_names_skip_user_names() {
        let s = ExecutionState::initial(vec![c("leq(?m1, #n2)")]);
        assert_eq!(s.fresh.next_metavar, 2);
        assert_eq!(s.fresh.next_nominal, 3);
    }
}
