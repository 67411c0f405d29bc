//! Dynamic checking of the ranking condition on seeded traces.
//!
//! A level mapping sends constraints to naturals. Built-in constraints sit
//! at level 0; a user constraint `c(t1, .., tn)` sits at `1 + Σ ‖ti‖` for the
//! mapping's norm `‖·‖`.
//!
//! Rigidity is sampled on the observed call set (every constraint moved into
//! the store) with substitutions sending metavariables to metavariables or
//! nominal constants and with permutations of nominal constants. The decrease
//! conditions are checked on every `apply` event, with the answer
//! substitution φ taken to be the most general unifier of the equations in the
//! instantiated body.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{run, ExecutionState, RunResult, Strategy, TraceEvent};
use crate::rules::Program;
use crate::term::{Constraint, Name, Permutation, Substitution, Term};
use crate::unify::{pattern_unify, UnifyProblem};

#[derive(Clone, Copy)]
pub struct LevelMapping {
    pub name: &'static str,
    pub norm: fn(&Term) -> usize,
}

fn forall_count(t: &Term) -> usize {
    t.count_ctor("forall")
}

pub const BUILTIN_NORMS: [&str; 3] = ["forall-count", "size", "nominal-count"];

impl LevelMapping {
    pub fn builtin(name: &str) -> Option<LevelMapping> {
        let norm: fn(&Term) -> usize = match name {
            "forall-count" => forall_count,
            "size" => Term::size,
            "nominal-count" => Term::count_nominals,
            _ => return None,
        };
        let name = BUILTIN_NORMS.into_iter().find(|n| *n == name)?;
        Some(LevelMapping { name, norm })
    }

    /// Level of a constraint, which should be β₀-normal.
    pub fn level(&self, c: &Constraint) -> usize {
        if c.is_builtin() {
            0
        } else {
            1 + c.args.iter().map(|t| (self.norm)(t)).sum::<usize>()
        }
    }
}

impl fmt::Debug for LevelMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelMapping").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `|C| ≠ |θC|` for a sampled substitution.
    NotRigidUnderSubstitution { constraint: Constraint, image: Constraint, before: usize, after: usize },
    /// `|C| ≠ |π(C)|` for a sampled nominal permutation.
    NotRigidUnderPermutation { constraint: Constraint, image: Constraint, before: usize, after: usize },
    /// A propagation head does not exceed a body constraint.
    PropagationIncrease { rule: Name, head: Constraint, body: Constraint, head_level: usize, body_level: usize },
    /// At the maximal level `p` the removed heads are not more numerous than
    /// the body constraints.
    SimpagationNoDecrease { rule: Name, level: usize, removed: usize, added: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub run: usize,
    /// Position in the trace of the event that exposed the violation.
    pub step: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default)]
pub struct RankingReport {
    pub runs: usize,
    /// Runs that exhausted their fuel or stopped with an engine error.
    pub incomplete_runs: usize,
    pub apply_events: usize,
    pub call_set: usize,
    pub violations: Vec<Violation>,
}

impl RankingReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rigidity_violations(&self) -> usize {
        self.violations
            .iter()
            .filter(|v| {
                matches!(
                    v.kind,
                    ViolationKind::NotRigidUnderSubstitution { .. } | ViolationKind::NotRigidUnderPermutation { .. }
                )
            })
            .count()
    }

    pub fn decrease_violations(&self) -> usize {
        self.violations.len() - self.rigidity_violations()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RankingConfig {
    pub runs: usize,
    pub seed: u64,
    pub fuel: usize,
    /// Substitutions and permutations sampled per call-set constraint.
    pub samples: usize,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig { runs: 10, seed: 0, fuel: 2_000, samples: 4 }
    }
}

pub fn check_ranking(program: &Program, goals: &[Constraint], lm: LevelMapping, runs: usize) -> RankingReport {
    check_ranking_with(program, goals, lm, &RankingConfig { runs, ..RankingConfig::default() })
}

pub fn check_ranking_with(
    program: &Program,
    goals: &[Constraint],
    lm: LevelMapping,
    cfg: &RankingConfig,
) -> RankingReport {
    let mut report = RankingReport { runs: cfg.runs, ..RankingReport::default() };
    // call-set constraint rendered → (run, step, constraint)
    let mut call_set: BTreeMap<String, (usize, usize, Constraint)> = BTreeMap::new();
    for r in 0..cfg.runs {
        let strategy = Strategy::Random { seed: cfg.seed.wrapping_add(r as u64) };
        let (trace, complete) = match run(ExecutionState::initial(goals.to_vec()), program, strategy, cfg.fuel) {
            Ok(out) => (out.trace, out.result != RunResult::OutOfFuel),
            Err(e) => (e.trace, false),
        };
        if !complete {
            report.incomplete_runs += 1;
        }
        for (step, ev) in trace.iter().enumerate() {
            match ev {
                TraceEvent::Introduce { constraint, .. } => {
                    call_set.entry(constraint.to_string()).or_insert_with(|| (r, step, constraint.clone()));
                }
                TraceEvent::Apply { rule, kept, heads, body, .. } => {
                    report.apply_events += 1;
                    if let Some(kind) = decrease(program, lm, rule, kept.len(), heads, body) {
                        report.violations.push(Violation { run: r, step, kind });
                    }
                }
                TraceEvent::Solve { .. } => {}
            }
        }
    }
    report.call_set = call_set.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (run, step, c) in call_set.into_values() {
        if let Some(kind) = rigidity(lm, &c, cfg.samples, &mut rng) {
            report.violations.push(Violation { run, step, kind });
        }
    }
    report
}

fn answer_substitution(body: &[Constraint]) -> Substitution {
    let eqs: Vec<(Term, Term)> =
        body.iter().filter(|c| c.is_eq()).map(|c| (c.args[0].clone(), c.args[1].clone())).collect();
    if eqs.is_empty() {
        return Substitution::new();
    }
    pattern_unify(UnifyProblem::new(eqs).with_fresh("?phi", 1)).map(|u| u.mgu).unwrap_or_default()
}

fn decrease(
    program: &Program,
    lm: LevelMapping,
    rule: &Name,
    n_kept: usize,
    heads: &[Constraint],
    body: &[Constraint],
) -> Option<ViolationKind> {
    let phi = answer_substitution(body);
    let body: Vec<Constraint> =
        body.iter().filter(|c| !c.is_builtin()).map(|c| phi.apply_constraint(c)).collect();
    let propagation = program.rule(rule).is_some_and(|r| r.removed.is_empty());
    if propagation {
        for h in heads {
            for b in &body {
                let (hl, bl) = (lm.level(h), lm.level(b));
                if hl <= bl {
                    return Some(ViolationKind::PropagationIncrease {
                        rule: rule.clone(),
                        head: h.clone(),
                        body: b.clone(),
                        head_level: hl,
                        body_level: bl,
                    });
                }
            }
        }
        return None;
    }
    let removed: Vec<usize> = heads[n_kept.min(heads.len())..].iter().map(|c| lm.level(c)).collect();
    let added: Vec<usize> = body.iter().map(|c| lm.level(c)).collect();
    let p = removed.iter().chain(&added).copied().max()?;
    let at = |xs: &[usize]| xs.iter().filter(|l| **l == p).count();
    let (r, a) = (at(&removed), at(&added));
    (r <= a).then(|| ViolationKind::SimpagationNoDecrease { rule: rule.clone(), level: p, removed: r, added: a })
}

fn rigidity(lm: LevelMapping, c: &Constraint, samples: usize, rng: &mut ChaCha8Rng) -> Option<ViolationKind> {
    let before = lm.level(c);
    let metas: Vec<Name> = c.metas().into_iter().collect();
    let noms: Vec<Name> = crate::term::support(c).into_iter().collect();
    for k in 0..samples {
        if !metas.is_empty() {
            let mut theta = Substitution::new();
            for (i, m) in metas.iter().enumerate() {
                let t = match rng.gen_range(0..3) {
                    0 => Term::meta(&format!("?r{k}_{i}")),
                    1 if !noms.is_empty() => Term::Nominal(noms.choose(rng).cloned().unwrap_or_default()),
                    _ => Term::nominal(&format!("#r{k}_{i}")),
                };
                theta.insert_simultaneous(m.clone(), t);
            }
            let image = theta.apply_constraint(c);
            let after = lm.level(&image);
            if after != before {
                return Some(ViolationKind::NotRigidUnderSubstitution { constraint: c.clone(), image, before, after });
            }
        }
        if !noms.is_empty() {
            let mut targets: Vec<Name> = noms.clone();
            targets.extend((0..noms.len()).map(|i| Name::from(format!("#p{k}_{i}"))));
            targets.shuffle(rng);
            let pairs: Vec<(Name, Name)> = noms.iter().cloned().zip(targets).collect();
            let pi = Permutation::from_pairs(pairs).unwrap_or_default();
            let image = pi.apply_constraint(c);
            let after = lm.level(&image);
            if after != before {
                return Some(ViolationKind::NotRigidUnderPermutation { constraint: c.clone(), image, before, after });
            }
        }
    }
    None
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NotRigidUnderSubstitution { constraint, image, before, after } => {
                write!(f, "not rigid: |{constraint}| = {before} but |{image}| = {after}")
            }
            ViolationKind::NotRigidUnderPermutation { constraint, image, before, after } => {
                write!(f, "depends on nominal names: |{constraint}| = {before} but |{image}| = {after}")
            }
            ViolationKind::PropagationIncrease { rule, head, body, head_level, body_level } => {
                write!(f, "{rule}: |{head}| = {head_level} does not exceed |{body}| = {body_level}")
            }
            ViolationKind::SimpagationNoDecrease { rule, level, removed, added } => {
                write!(f, "{rule}: at level {level} removes {removed} and adds {added}")
            }
        }
    }
}

impl fmt::Display for RankingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 20;
        for v in self.violations.iter().take(SHOWN) {
            writeln!(f, "run {} step {}: {}", v.run, v.step, v.kind)?;
        }
        if self.violations.len() > SHOWN {
            writeln!(f, "... and {} more", self.violations.len() - SHOWN)?;
        }
        write!(
            f,
            "{} runs ({} incomplete), {} rule applications, {} call-set constraints, {} violations",
            self.runs,
            self.incomplete_runs,
            self.apply_events,
            self.call_set,
            self.violations.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goals_for, parse_program};

    #[test]
    fn fresh_constants_break_nominal_count() {
        let p = parse_program(include_str!("../../programs/fresh_loop.chr")).unwrap();
        let g = parse_goals_for("c(X).", &p).unwrap();
        let r = check_ranking(&p, &g, LevelMapping::builtin("nominal-count").unwrap(), 3);
        assert!(r.rigidity_violations() > 0, "{r}");
        assert!(r.incomplete_runs == 3);
    }

    #[test]
    fn forall_count_decreases_on_identity_goal() {
        let p = parse_program(include_str!("../../programs/higher_rank.chr")).unwrap();
        let g = parse_goals_for(include_str!("../../programs/id3.chg"), &p).unwrap();
        let r = check_ranking(&p, &g, LevelMapping::builtin("forall-count").unwrap(), 10);
        assert!(r.is_ok(), "{r}");
        assert!(r.apply_events > 0);
    }

    #[test]
    fn no_applications_is_vacuous() {
        let p = parse_program(include_str!("../../programs/higher_rank.chr")).unwrap();
        let r = check_ranking(&p, &[], LevelMapping::builtin("size").unwrap(), 2);
        assert!(r.is_ok());
        assert_eq!(r.apply_events, 0);
    }

    #[test]
    fn unknown_norm() {
        assert!(LevelMapping::builtin("depth").is_none());
    }

    #[test]
    fn propagation_must_decrease() {
        let p = parse_program("grow @ c(X) ==> c(f(X)).").unwrap();
        let g = parse_goals_for("c(a).", &p).unwrap();
        let cfg = RankingConfig { runs: 1, fuel: 40, ..RankingConfig::default() };
        let r = check_ranking_with(&p, &g, LevelMapping::builtin("size").unwrap(), &cfg);
        assert!(r.decrease_violations() > 0);
    }
}
