//! Bounded joinability of critical pairs and the local-confluence report.

use std::fmt;

use crate::analysis::critical::{critical_pairs, CriticalPair, GuardStatus};
use crate::analysis::variant::{is_variant, Variance, VariantWitness};
use crate::engine::{explore, Exploration, ExploreLimits, ExecutionState};
use crate::rules::Program;

pub const DEFAULT_NODE_LIMIT: usize = 5_000;

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Joinability {
    Joinable {
        witness: VariantWitness,
        /// The two reachable states found to be variants.
        left: ExecutionState,
        right: ExecutionState,
    },
    /// Both sides were explored to completion and no pair of reachable
    /// states are variants.
    NotJoinable,
    Inconclusive(String),
}

impl Joinability {
    pub fn is_joinable(&self) -> bool {
        matches!(self, Joinability::Joinable { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Joinability::Joinable { .. } => "joinable",
            Joinability::NotJoinable => "not joinable",
            Joinability::Inconclusive(_) => "inconclusive",
        }
    }
}

fn describe_open(e: &Exploration) -> Option<String> {
    if let Some(err) = e.errors.first() {
        Some(format!("engine error: {err}"))
    } else if e.truncated {
        Some("depth or node limit reached".into())
    } else {
        None
    }
}

/// Explores both sides up to `depth` rule applications each and looks for
/// a pair of reachable states that are variants.
pub fn joinable(cp: &CriticalPair, program: &Program, depth: usize) -> Joinability {
    joinable_with(cp, program, ExploreLimits { depth, max_nodes: DEFAULT_NODE_LIMIT })
}

pub fn joinable_with(cp: &CriticalPair, program: &Program, limits: ExploreLimits) -> Joinability {
    let left = explore(cp.left.clone(), program, limits);
    let right = explore(cp.right.clone(), program, limits);
    let mut inconclusive = None;
    for l in &left.nodes {
        for r in &right.nodes {
            match is_variant(&l.state, &r.state) {
                Variance::Variant(witness) => {
                    return Joinability::Joinable { witness, left: l.state.clone(), right: r.state.clone() }
                }
                Variance::Inconclusive => inconclusive = Some("nominal set too large for the permutation search".into()),
                Variance::NotVariant => {}
            }
        }
    }
    if let Some(reason) = describe_open(&left).or_else(|| describe_open(&right)).or(inconclusive) {
        return Joinability::Inconclusive(reason);
    }
    if let GuardStatus::Undetermined(atoms) = &cp.guard {
        let atoms: Vec<String> = atoms.iter().map(ToString::to_string).collect();
        return Joinability::Inconclusive(format!("guard {} not decidable on the overlap", atoms.join(", ")));
    }
    Joinability::NotJoinable
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every critical pair is joinable.
    LocallyConfluent,
    Counterexample,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub pair: CriticalPair,
    pub verdict: Joinability,
}

#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub pairs: Vec<PairReport>,
    pub verdict: Verdict,
}

pub fn check_local_confluence(program: &Program, depth: usize) -> ConfluenceReport {
    let pairs: Vec<PairReport> = critical_pairs(program)
        .into_iter()
        .map(|pair| {
            let verdict = joinable(&pair, program, depth);
            PairReport { pair, verdict }
        })
        .collect();
    let verdict = if pairs.iter().any(|p| matches!(p.verdict, Joinability::NotJoinable)) {
        Verdict::Counterexample
    } else if pairs.iter().any(|p| matches!(p.verdict, Joinability::Inconclusive(_))) {
        Verdict::Inconclusive
    } else {
        Verdict::LocallyConfluent
    };
    ConfluenceReport { pairs, verdict }
}

impl fmt::Display for PairReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let overlap: Vec<String> = self.pair.overlap.pairs.iter().map(|(a, b)| format!("{a}~{b}")).collect();
        write!(f, "{} / {} [{}]: {}", self.pair.rule1, self.pair.rule2, overlap.join(" "), self.verdict.label())?;
        match &self.verdict {
            Joinability::Inconclusive(why) => write!(f, " ({why})"),
            Joinability::NotJoinable => {
                let store: Vec<String> = self.pair.origin.store_constraints().map(ToString::to_string).collect();
                write!(f, " on {}", store.join(", "))
            }
            Joinability::Joinable { .. } => Ok(()),
        }
    }
}

impl fmt::Display for ConfluenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.pairs {
            writeln!(f, "{p}")?;
        }
        let joinable = self.pairs.iter().filter(|p| p.verdict.is_joinable()).count();
        let verdict = match self.verdict {
            Verdict::LocallyConfluent => "locally confluent",
            Verdict::Counterexample => "counterexample found",
            Verdict::Inconclusive => "inconclusive",
        };
        write!(f, "{joinable}/{} critical pairs joinable: {verdict}", self.pairs.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn competing_simplifications_are_a_counterexample() {
        let p = parse_program(include_str!("../../programs/not_joinable.chr")).unwrap();
        let r = check_local_confluence(&p, 4);
        assert_eq!(r.verdict, Verdict::Counterexample);
        assert!(r.pairs.iter().any(|p| matches!(p.verdict, Joinability::NotJoinable)));
    }

    #[test]
    fn type_class_program_is_locally_confluent() {
        let p = parse_program(include_str!("../../programs/typeclass.chr")).unwrap();
        let r = check_local_confluence(&p, 4);
        assert_eq!(r.verdict, Verdict::LocallyConfluent, "{r}");
    }

    #[test]
    fn joinability_is_monotone_in_depth() {
        let p = parse_program(include_str!("../../programs/typeclass.chr")).unwrap();
        for cp in critical_pairs(&p) {
            let shallow = joinable(&cp, &p, 2).is_joinable();
            let deep = joinable(&cp, &p, 5).is_joinable();
            assert!(!shallow || deep);
        }
    }

    #[test]
    fn nominal_bodies_differing_only_in_names_join() {
        let p = parse_program("a @ c(X) <=> nabla Y. d(Y).\nb @ c(X) <=> nabla Z. d(Z).").unwrap();
        assert_eq!(check_local_confluence(&p, 2).verdict, Verdict::LocallyConfluent);
    }
}
