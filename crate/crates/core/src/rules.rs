//! Rules, guards and programs, plus the static well-formedness checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{free_metavars, is_pattern, is_well_defined_constraint, support, Constraint, Name, Term, EQ, TRUE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardAtom {
    True,
    /// `T1 == T2`: both sides α-equal once instantiated.
    Equal(Term, Term),
    /// `not_f(T)`: `T` is headed by a constructor other than `f`, or is a
    /// nominal constant. Never holds for an unbound metavariable.
    NotHeadedBy(Term, Name),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Guard {
    pub atoms: Vec<GuardAtom>,
}

impl Guard {
    pub fn is_trivial(&self) -> bool {
        self.atoms.iter().all(|a| matches!(a, GuardAtom::True))
    }

    fn metas(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            match a {
                GuardAtom::True => {}
                GuardAtom::Equal(l, r) => {
                    l.collect_metas(&mut out);
                    r.collect_metas(&mut out);
                }
                GuardAtom::NotHeadedBy(t, _) => t.collect_metas(&mut out),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Simplification,
    Propagation,
    Simpagation,
}

/// `name @ kept \ removed <=> guard | nabla X̄. exists Ȳ. body`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: Name,
    pub kept: Vec<Constraint>,
    pub removed: Vec<Constraint>,
    pub guard: Guard,
    pub nabla_vars: Vec<Name>,
    pub exists_vars: Vec<Name>,
    pub body: Vec<Constraint>,
}

pub fn classify(rule: &Rule) -> RuleKind {
    if rule.kept.is_empty() {
        RuleKind::Simplification
    } else if rule.removed.is_empty() {
        RuleKind::Propagation
    } else {
        RuleKind::Simpagation
    }
}

impl Rule {
    pub fn kind(&self) -> RuleKind {
        classify(self)
    }

    /// Kept heads followed by removed heads.
    pub fn heads(&self) -> impl Iterator<Item = &Constraint> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn head_metas(&self) -> BTreeSet<Name> {
        let heads: Vec<Constraint> = self.heads().cloned().collect();
        free_metavars(&heads)
    }

    /// Heads with every repeated metavariable occurrence renamed apart, and
    /// the equality guards that restore the identification.
    ///
    /// `leq(T, T)` becomes `leq(T, T'1)` with `T == T'1`.
    pub fn linearized(&self) -> (Vec<Constraint>, Vec<GuardAtom>) {
        let mut seen: BTreeMap<Name, usize> = BTreeMap::new();
        let mut extra = Vec::new();
        let heads = self
            .heads()
            .map(|c| c.map_args(|a| linearize_term(a, &mut seen, &mut extra)))
            .collect();
        (heads, extra)
    }
}

fn linearize_term(t: &Term, seen: &mut BTreeMap<Name, usize>, extra: &mut Vec<GuardAtom>) -> Term {
    match t {
        Term::Meta(n) => match seen.get_mut(n) {
            None => {
                seen.insert(n.clone(), 0);
                t.clone()
            }
            Some(count) => {
                *count += 1;
                let copy: Name = format!("{n}'{count}").into();
                extra.push(GuardAtom::Equal(Term::Meta(n.clone()), Term::Meta(copy.clone())));
                Term::Meta(copy)
            }
        },
        Term::Nominal(_) | Term::Bound(_) => t.clone(),
        Term::Ctor(f, xs) => Term::Ctor(f.clone(), xs.iter().map(|x| linearize_term(x, seen, extra)).collect()),
        Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(linearize_term(b, seen, extra))),
        Term::App(f, a) => {
            let f = linearize_term(f, seen, extra);
            Term::app(f, linearize_term(a, seen, extra))
        }
    }
}

/// Arity table for one symbol namespace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<Name, usize>,
}

impl Signature {
    pub fn get(&self, symbol: &str) -> Option<usize> {
        self.arities.get(symbol).copied()
    }

    /// Records `symbol/arity`; returns the previously recorded arity on a
    /// mismatch.
    pub fn declare(&mut self, symbol: &str, arity: usize) -> Result<(), usize> {
        match self.arities.get(symbol) {
            Some(&a) if a != arity => Err(a),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(symbol.into(), arity);
                Ok(())
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.arities.iter().map(|(k, v)| (k, *v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub constraint_signature: Signature,
    pub term_signature: Signature,
    pub builtin_symbols: BTreeSet<Name>,
}

impl Program {
    pub fn new(rules: Vec<Rule>, constraint_signature: Signature, term_signature: Signature) -> Self {
        Program {
            rules,
            constraint_signature,
            term_signature,
            builtin_symbols: default_builtins(),
        }
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.name == name)
    }

    pub fn is_builtin(&self, symbol: &str) -> bool {
        self.builtin_symbols.contains(symbol)
    }
}

pub(crate) fn default_builtins() -> BTreeSet<Name> {
    BTreeSet::from([Name::from(EQ), Name::from(TRUE)])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    EmptyHeads,
    DuplicateRuleName,
    BuiltinHead(Constraint),
    NominalInHead(Constraint),
    NonPatternHead(Constraint),
    NominalInBody(Constraint),
    UnboundBodyVar(Name),
    UnboundGuardVar(Name),
    NonPatternGuard,
    /// A name used by two of: heads, nabla list, exists list.
    QuantifierClash(Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Name,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: ", self.rule)?;
        match &self.kind {
            DiagnosticKind::EmptyHeads => write!(f, "rule has no heads"),
            DiagnosticKind::DuplicateRuleName => write!(f, "duplicate rule name"),
            DiagnosticKind::BuiltinHead(c) => write!(f, "built-in constraint `{c}` cannot be a head"),
            DiagnosticKind::NominalInHead(c) => write!(f, "head `{c}` mentions a nominal constant"),
            DiagnosticKind::NonPatternHead(c) => write!(f, "head `{c}` is not a well-defined pattern"),
            DiagnosticKind::NominalInBody(c) => write!(f, "body `{c}` mentions a nominal constant"),
            DiagnosticKind::UnboundBodyVar(v) => write!(f, "variable {v} in body is not bound by a head, nabla or exists"),
            DiagnosticKind::UnboundGuardVar(v) => write!(f, "variable {v} in guard does not occur in a head"),
            DiagnosticKind::NonPatternGuard => write!(f, "guard mentions a term outside the pattern fragment"),
            DiagnosticKind::QuantifierClash(v) => write!(f, "variable {v} is bound twice"),
        }
    }
}

/// Checks every rule against the well-formedness conditions. An empty result
/// means the program is valid.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for r in &p.rules {
        let mut diag = |kind| out.push(Diagnostic { rule: r.name.clone(), kind });
        if !names.insert(r.name.clone()) {
            diag(DiagnosticKind::DuplicateRuleName);
        }
        if r.kept.is_empty() && r.removed.is_empty() {
            diag(DiagnosticKind::EmptyHeads);
        }
        for h in r.heads() {
            if p.is_builtin(&h.symbol) {
                diag(DiagnosticKind::BuiltinHead(h.clone()));
            }
            if !support(h).is_empty() {
                diag(DiagnosticKind::NominalInHead(h.clone()));
            } else if !is_well_defined_constraint(h) {
                diag(DiagnosticKind::NonPatternHead(h.clone()));
            }
        }
        for b in &r.body {
            if !support(b).is_empty() {
                diag(DiagnosticKind::NominalInBody(b.clone()));
            }
        }

        let heads = r.head_metas();
        let nabla: BTreeSet<Name> = r.nabla_vars.iter().cloned().collect();
        let exists: BTreeSet<Name> = r.exists_vars.iter().cloned().collect();
        let mut clashes: BTreeSet<Name> = BTreeSet::new();
        clashes.extend(heads.intersection(&nabla).cloned());
        clashes.extend(heads.intersection(&exists).cloned());
        clashes.extend(nabla.intersection(&exists).cloned());
        for dup in duplicates(&r.nabla_vars).chain(duplicates(&r.exists_vars)) {
            clashes.insert(dup);
        }
        for v in clashes {
            diag(DiagnosticKind::QuantifierClash(v));
        }

        for v in free_metavars(&r.body) {
            if !heads.contains(&v) && !nabla.contains(&v) && !exists.contains(&v) {
                diag(DiagnosticKind::UnboundBodyVar(v));
            }
        }
        for v in r.guard.metas() {
            if !heads.contains(&v) {
                diag(DiagnosticKind::UnboundGuardVar(v));
            }
        }
        let guard_terms_ok = r.guard.atoms.iter().all(|a| match a {
            GuardAtom::True => true,
            GuardAtom::Equal(l, r) => is_pattern(l) && is_pattern(r),
            GuardAtom::NotHeadedBy(t, _) => is_pattern(t),
        });
        if !guard_terms_ok {
            diag(DiagnosticKind::NonPatternGuard);
        }
    }
    out
}

fn duplicates(xs: &[Name]) -> impl Iterator<Item = Name> + '_ {
    xs.iter().enumerate().filter(|(i, x)| xs[..*i].contains(x)).map(|(_, x)| x.clone())
}

// ---------------------------------------------------------------------------
// printing; the output parses back to an equal program

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for GuardAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardAtom::True => write!(f, "true"),
            GuardAtom::Equal(l, r) => write!(f, "{l} == {r}"),
            GuardAtom::NotHeadedBy(t, s) => write!(f, "not_{s}({t})"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ ", self.name)?;
        match self.kind() {
            RuleKind::Propagation => {
                write_list(f, &self.kept)?;
                write!(f, " ==> ")?;
            }
            RuleKind::Simplification => {
                write_list(f, &self.removed)?;
                write!(f, " <=> ")?;
            }
            RuleKind::Simpagation => {
                write_list(f, &self.kept)?;
                write!(f, " \\ ")?;
                write_list(f, &self.removed)?;
                write!(f, " <=> ")?;
            }
        }
        if !self.guard.atoms.is_empty() {
            write_list(f, &self.guard.atoms)?;
            write!(f, " | ")?;
        }
        if !self.nabla_vars.is_empty() {
            write!(f, "nabla {}. ", self.nabla_vars.join(" "))?;
        }
        if !self.exists_vars.is_empty() {
            write!(f, "exists {}. ", self.exists_vars.join(" "))?;
        }
        if self.body.is_empty() {
            write!(f, "true")?;
        } else {
            write_list(f, &self.body)?;
        }
        write!(f, ".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

trait JoinNames {
    fn join(&self, sep: &str) -> String;
}

impl JoinNames for Vec<Name> {
    fn join(&self, sep: &str) -> String {
        self.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(sep)
    }
}
