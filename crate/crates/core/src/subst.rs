//! Finite substitutions, syntactic matching and renaming apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rewriting::{RelationMode, Trs};
use crate::term::{Term, Variable};

/// Reserved separator for generated variable names. Parsers reject it in user input.
pub const FRESH_SEPARATOR: char = '#';

/// A finite map from variables to terms. Identity bindings are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution {
    bindings: BTreeMap<Variable, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    /// Binds `var` to `term`. Binding a variable to itself removes the binding.
    pub fn bind(&mut self, var: Variable, term: Term) {
        if term == Term::Var(var.clone()) {
            self.bindings.remove(&var);
        } else {
            self.bindings.insert(var, term);
        }
    }

    pub fn with(mut self, var: &str, term: Term) -> Substitution {
        self.bind(Variable::new(var), term);
        self
    }

    pub fn get(&self, var: &Variable) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Variable> {
        self.bindings.keys()
    }

    pub fn range(&self) -> impl Iterator<Item = &Term> {
        self.bindings.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Homomorphic application; unbound variables are left unchanged.
    pub fn apply(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| term.clone()),
            Term::App(symbol, args) => Term::App(symbol.clone(), args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// Keeps only the bindings of variables in `vars`.
    pub fn restrict(&self, vars: &BTreeSet<Variable>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    /// True iff every term in the range is a normal form of `trs`.
    pub fn is_normal(&self, trs: &Trs) -> bool {
        self.range().all(|t| trs.is_normal_form(t, RelationMode::Full))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<(Variable, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Substitution {
        let mut sigma = Substitution::new();
        for (v, t) in iter {
            sigma.bind(v, t);
        }
        sigma
    }
}

/// Free-standing form of [`Substitution::apply`].
pub fn apply(sigma: &Substitution, term: &Term) -> Term {
    sigma.apply(term)
}

/// Syntactic matching: the unique `σ` with domain within `vars(pattern)` such that
/// `patternσ = subject`, if one exists.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut bindings = BTreeMap::new();
    match_into(pattern, subject, &mut bindings).then(|| bindings.into_iter().collect())
}

fn match_into(pattern: &Term, subject: &Term, bindings: &mut BTreeMap<Variable, Term>) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => match bindings.get(v) {
            Some(bound) => bound == subject,
            None => {
                bindings.insert(v.clone(), subject.clone());
                true
            }
        },
        (Term::App(f, ps), Term::App(g, ss)) => {
            f == g && ps.iter().zip(ss.iter()).all(|(p, s)| match_into(p, s, bindings))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}

/// Strips a generated `#k` suffix, if present.
fn base_name(name: &str) -> &str {
    match name.rsplit_once(FRESH_SEPARATOR) {
        Some((base, k)) if !base.is_empty() && k.parse::<usize>().is_ok() => base,
        _ => name,
    }
}

/// Returns a variant of `term` sharing no variable with `forbidden`, and the renaming used.
///
/// Only clashing variables are renamed. A clashing `x` becomes `x#k` with `k ≥ 1` the
/// smallest index whose name is neither forbidden, present in `term`, nor already chosen.
pub fn rename_apart(term: &Term, forbidden: &BTreeSet<Variable>) -> (Term, Substitution) {
    let present = term.vars();
    let mut taken: BTreeSet<Variable> = forbidden.union(&present).cloned().collect();
    let mut renaming = Substitution::new();
    for var in term.vars_in_order() {
        if !forbidden.contains(&var) {
            continue;
        }
        let base = base_name(var.name());
        let fresh = (1..)
            .map(|k| Variable::new(&format!("{base}{FRESH_SEPARATOR}{k}")))
            .find(|candidate| !taken.contains(candidate))
            .expect("unbounded search");
        taken.insert(fresh.clone());
        renaming.bind(var, Term::Var(fresh));
    }
    (renaming.apply(term), renaming)
}

/// Renames variables to `v1, v2, …` in first-occurrence order across `terms`.
pub fn canonical_renaming(terms: &[&Term]) -> Substitution {
    let mut order: Vec<Variable> = Vec::new();
    for t in terms {
        t.visit_vars(&mut |v| {
            if !order.contains(v) {
                order.push(v.clone());
            }
        });
    }
    order
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, Term::var(&format!("v{}", i + 1))))
        .collect()
}
