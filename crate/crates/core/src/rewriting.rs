//! Rewrite rules and systems, the four reduction relations, normal forms, bounded
//! normalization, derivation search and descendant sets.
//!
//! Every search in this module is bounded by an explicit fuel budget. A search that runs
//! out of fuel reports that fact; it never concludes that a derivation does not exist.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subst::{match_term, Substitution};
use crate::term::{Position, Signature, Symbol, Term, TermError, Variable};

/// Default budget for every bounded search.
pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule {index}: left-hand side {lhs} is a variable")]
    LhsIsVariable { index: usize, lhs: String },
    #[error("rule {index}: variable {var} of the right-hand side does not occur in the left-hand side")]
    FreshRhsVariable { index: usize, var: String },
    #[error("rule {index}: {source}")]
    Signature { index: usize, source: TermError },
    #[error("rule {index}: malformed term")]
    Malformed { index: usize },
}

/// A rewrite rule `lhs -> rhs`, numbered by its place in the system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    lhs: Term,
    rhs: Term,
    index: usize,
}

impl Rule {
    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn vars(&self) -> BTreeSet<Variable> {
        self.lhs.vars()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

/// Which of the four reduction relations a step or search uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationMode {
    Full,
    NonRoot,
    Innermost,
    NonRootInnermost,
}

impl RelationMode {
    pub const ALL: [RelationMode; 4] = [
        RelationMode::Full,
        RelationMode::NonRoot,
        RelationMode::Innermost,
        RelationMode::NonRootInnermost,
    ];

    pub fn is_innermost(self) -> bool {
        matches!(self, RelationMode::Innermost | RelationMode::NonRootInnermost)
    }

    pub fn is_non_root(self) -> bool {
        matches!(self, RelationMode::NonRoot | RelationMode::NonRootInnermost)
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationMode::Full => "full",
            RelationMode::NonRoot => "non-root",
            RelationMode::Innermost => "innermost",
            RelationMode::NonRootInnermost => "non-root-innermost",
        }
    }
}

impl fmt::Display for RelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RelationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<RelationMode, String> {
        RelationMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown relation mode `{s}`"))
    }
}

/// One rewrite step: `rule_index` applied at `position` with `substitution`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub position: Position,
    pub rule_index: usize,
    pub substitution: Substitution,
    pub result: Term,
}

/// A finite derivation `start → … → end` under one relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub start: Term,
    pub steps: Vec<Step>,
    pub mode: RelationMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {index}: {reason}")]
pub struct ReplayError {
    pub index: usize,
    pub reason: String,
}

impl DerivationTrace {
    pub fn empty(start: Term, mode: RelationMode) -> DerivationTrace {
        DerivationTrace {
            start,
            steps: Vec::new(),
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn end(&self) -> &Term {
        self.steps.last().map_or(&self.start, |s| &s.result)
    }

    /// Every term of the derivation, start included.
    pub fn terms(&self) -> Vec<&Term> {
        std::iter::once(&self.start)
            .chain(self.steps.iter().map(|s| &s.result))
            .collect()
    }

    /// Appends the steps of `other`, which must start where `self` ends.
    pub fn extend(&mut self, other: DerivationTrace) {
        debug_assert_eq!(self.end(), &other.start);
        self.steps.extend(other.steps);
    }

    /// The same derivation performed inside `context` at `position`.
    pub fn embed(&self, context: &Term, position: &Position, mode: RelationMode) -> Result<DerivationTrace, TermError> {
        let start = context.replace_at(position, self.start.clone())?;
        let steps = self
            .steps
            .iter()
            .map(|step| {
                Ok(Step {
                    position: position.concat(&step.position),
                    rule_index: step.rule_index,
                    substitution: step.substitution.clone(),
                    result: context.replace_at(position, step.result.clone())?,
                })
            })
            .collect::<Result<_, TermError>>()?;
        Ok(DerivationTrace { start, steps, mode })
    }

    /// Re-checks every step against `trs` under the trace's mode and returns the final term.
    pub fn replay(&self, trs: &Trs) -> Result<Term, ReplayError> {
        let mut current = self.start.clone();
        for (index, step) in self.steps.iter().enumerate() {
            trs.check_step(&current, step, self.mode)
                .map_err(|reason| ReplayError { index, reason })?;
            current = step.result.clone();
        }
        Ok(current)
    }
}

/// Outcome of [`Trs::normalize`] when the budget runs out first.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fuel exhausted after {fuel} steps")]
pub struct FuelExhausted {
    pub fuel: usize,
    pub partial: DerivationTrace,
}

/// Outcome of a bounded reachability search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reach {
    Verified(DerivationTrace),
    /// Not a proof of non-reachability; `exhaustive` is true when the whole reachable set
    /// was explored within the budget.
    NotFound {
        fuel: usize,
        explored: usize,
        exhaustive: bool,
    },
}

impl Reach {
    pub fn is_verified(&self) -> bool {
        matches!(self, Reach::Verified(_))
    }

    pub fn trace(&self) -> Option<&DerivationTrace> {
        match self {
            Reach::Verified(trace) => Some(trace),
            Reach::NotFound { .. } => None,
        }
    }
}

/// Breadth-first descendants of a term, in discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descendants {
    pub terms: Vec<Term>,
    pub truncated: bool,
}

impl Descendants {
    pub fn contains(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A term rewriting system: ordered rules over an inferred signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trs {
    signature: Signature,
    variables: BTreeSet<Variable>,
    rules: Vec<Rule>,
}

impl Trs {
    /// Builds a system from rules in order, checking the usual rule restrictions and that
    /// every symbol is used with one arity.
    pub fn new(rules: Vec<(Term, Term)>) -> Result<Trs, RuleError> {
        let mut signature = Signature::new();
        let mut variables = BTreeSet::new();
        let mut checked = Vec::with_capacity(rules.len());
        for (index, (lhs, rhs)) in rules.into_iter().enumerate() {
            if !lhs.is_well_formed() || !rhs.is_well_formed() {
                return Err(RuleError::Malformed { index });
            }
            if lhs.is_var() {
                return Err(RuleError::LhsIsVariable {
                    index,
                    lhs: lhs.to_string(),
                });
            }
            let lhs_vars = lhs.vars();
            if let Some(var) = rhs.vars().into_iter().find(|v| !lhs_vars.contains(v)) {
                return Err(RuleError::FreshRhsVariable {
                    index,
                    var: var.to_string(),
                });
            }
            for term in [&lhs, &rhs] {
                signature
                    .declare_term(term)
                    .map_err(|source| RuleError::Signature { index, source })?;
            }
            variables.extend(lhs_vars);
            checked.push(Rule { lhs, rhs, index });
        }
        Ok(Trs {
            signature,
            variables,
            rules: checked,
        })
    }

    /// Adds declared variables (e.g. from a `(VAR …)` block) that may not occur in any rule.
    pub fn with_variables(mut self, vars: impl IntoIterator<Item = Variable>) -> Trs {
        self.variables.extend(vars);
        self
    }

    /// Adds symbols that occur in no rule, such as extra constructors.
    pub fn with_symbols(mut self, symbols: &[Symbol]) -> Result<Trs, TermError> {
        for symbol in symbols {
            self.signature.declare(symbol)?;
        }
        Ok(self)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn variables(&self) -> &BTreeSet<Variable> {
        &self.variables
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, index: usize) -> Option<&Rule> {
        self.rules.get(index)
    }

    /// Root symbols of left-hand sides.
    pub fn defined_symbols(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .filter_map(|r| r.lhs.root_symbol().ok().cloned())
            .collect()
    }

    pub fn is_defined(&self, symbol: &Symbol) -> bool {
        self.rules.iter().any(|r| r.lhs.root_symbol().ok() == Some(symbol))
    }

    /// True iff some rule applies at the root of `term`.
    pub fn is_redex(&self, term: &Term) -> bool {
        self.rules.iter().any(|r| match_term(&r.lhs, term).is_some())
    }

    /// Normal form for the full relation: no redex anywhere.
    fn is_full_normal(&self, term: &Term) -> bool {
        !self.is_redex(term) && term.args().iter().all(|a| self.is_full_normal(a))
    }

    /// Every proper subterm is a normal form (`nf` of the non-root relation).
    pub fn is_nr_normal(&self, term: &Term) -> bool {
        term.args().iter().all(|a| self.is_full_normal(a))
    }

    /// True iff `term` has no successor under `mode`.
    pub fn is_normal_form(&self, term: &Term, mode: RelationMode) -> bool {
        // An innermost redex exists below any redex, so the innermost relations share
        // normal forms with their unrestricted counterparts.
        match mode {
            RelationMode::Full | RelationMode::Innermost => self.is_full_normal(term),
            RelationMode::NonRoot | RelationMode::NonRootInnermost => self.is_nr_normal(term),
        }
    }

    fn position_allowed(&self, redex: &Term, position: &Position, mode: RelationMode) -> bool {
        !(mode.is_non_root() && position.is_root()) && !(mode.is_innermost() && !self.is_nr_normal(redex))
    }

    fn step_with(&self, term: &Term, position: &Position, redex: &Term, rule: &Rule) -> Option<Step> {
        let sigma = match_term(&rule.lhs, redex)?;
        let result = term
            .replace_at(position, sigma.apply(&rule.rhs))
            .expect("position of the term");
        Some(Step {
            position: position.clone(),
            rule_index: rule.index,
            substitution: sigma,
            result,
        })
    }

    /// The lowest-index rule step at `position` that is valid under `mode`.
    pub fn reduce_at(&self, term: &Term, position: &Position, mode: RelationMode) -> Result<Option<Step>, TermError> {
        let redex = term.subterm_at(position)?;
        if !self.position_allowed(redex, position, mode) {
            return Ok(None);
        }
        Ok(self
            .rules
            .iter()
            .find_map(|rule| self.step_with(term, position, redex, rule)))
    }

    /// All one-step reducts under `mode`, ordered by position (pre-order) then rule index.
    pub fn successors(&self, term: &Term, mode: RelationMode) -> Vec<Step> {
        self.redexes(term, mode)
            .into_iter()
            .map(|(position, rule, sigma)| self.build_step(term, position, rule, sigma))
            .collect()
    }

    /// The first step of [`Trs::successors`] (leftmost-lowest position, lowest rule index).
    pub fn first_step(&self, term: &Term, mode: RelationMode) -> Option<Step> {
        self.redexes(term, mode)
            .into_iter()
            .next()
            .map(|(position, rule, sigma)| self.build_step(term, position, rule, sigma))
    }

    fn build_step(&self, term: &Term, position: Position, rule: usize, sigma: Substitution) -> Step {
        let result = term
            .replace_at(&position, sigma.apply(&self.rules[rule].rhs))
            .expect("position of the term");
        Step {
            position,
            rule_index: rule,
            substitution: sigma,
            result,
        }
    }

    /// Valid `(position, rule, matcher)` triples in pre-order, found in one bottom-up pass
    /// that also tracks which subterms are normal forms.
    fn redexes(&self, term: &Term, mode: RelationMode) -> Vec<(Position, usize, Substitution)> {
        let mut out = Vec::new();
        self.collect_redexes(term, &mut Vec::new(), mode, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Returns whether `sub` is a normal form.
    fn collect_redexes(
        &self,
        sub: &Term,
        path: &mut Vec<usize>,
        mode: RelationMode,
        out: &mut Vec<(Position, usize, Substitution)>,
    ) -> bool {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
            let mut args_normal = true;
            for (i, arg) in sub.args().iter().enumerate() {
                path.push(i + 1);
                args_normal &= self.collect_redexes(arg, path, mode, out);
                path.pop();
            }
            let allowed = !(mode.is_non_root() && path.is_empty()) && !(mode.is_innermost() && !args_normal);
            let mut redex = false;
            for rule in &self.rules {
                if let Some(sigma) = match_term(&rule.lhs, sub) {
                    redex = true;
                    if !allowed {
                        break;
                    }
                    out.push((Position::new(path.clone()), rule.index, sigma));
                }
            }
            args_normal && !redex
        })
    }

    /// Checks one step from `source` against the rules and `mode`.
    pub fn check_step(&self, source: &Term, step: &Step, mode: RelationMode) -> Result<(), String> {
        let rule = self
            .rule(step.rule_index)
            .ok_or_else(|| format!("no rule {}", step.rule_index))?;
        let redex = source
            .get(&step.position)
            .ok_or_else(|| format!("{} is not a position of {source}", step.position))?;
        if step.substitution.apply(&rule.lhs) != *redex {
            return Err(format!(
                "rule {} with {} does not match {redex}",
                step.rule_index, step.substitution
            ));
        }
        let expected = source
            .replace_at(&step.position, step.substitution.apply(&rule.rhs))
            .map_err(|e| e.to_string())?;
        if expected != step.result {
            return Err(format!("expected {expected}, trace has {}", step.result));
        }
        if mode.is_non_root() && step.position.is_root() {
            return Err("root step in a non-root derivation".into());
        }
        if mode.is_innermost() && !self.is_nr_normal(redex) {
            return Err(format!("redex {redex} has a reducible proper subterm"));
        }
        Ok(())
    }

    /// Rewrites with the leftmost-lowest strategy until a normal form for `mode`, taking at
    /// most `fuel` steps.
    pub fn normalize(&self, term: &Term, mode: RelationMode, fuel: usize) -> Result<DerivationTrace, FuelExhausted> {
        let mut trace = DerivationTrace::empty(term.clone(), mode);
        loop {
            let Some(step) = self.first_step(trace.end(), mode) else {
                return Ok(trace);
            };
            if trace.len() == fuel {
                return Err(FuelExhausted { fuel, partial: trace });
            }
            trace.steps.push(step);
        }
    }

    /// Breadth-first search for a derivation `from →* to`, visiting at most `fuel`
    /// distinct terms. Found traces are shortest and are replayed before being returned.
    pub fn derives(&self, from: &Term, to: &Term, mode: RelationMode, fuel: usize) -> Reach {
        let space = StateSpace::explore(self, from, mode, fuel, |t| t == to);
        match space.hit {
            Some(id) => {
                let trace = space.trace_to(id);
                debug_assert!(trace.replay(self).is_ok());
                Reach::Verified(trace)
            }
            None => Reach::NotFound {
                fuel,
                explored: space.nodes.len(),
                exhaustive: !space.truncated,
            },
        }
    }

    /// Terms reachable from `term` under `mode`, at most `fuel` of them.
    pub fn descendants(&self, term: &Term, mode: RelationMode, fuel: usize) -> Descendants {
        let space = StateSpace::explore(self, term, mode, fuel, |_| false);
        Descendants {
            terms: space.nodes,
            truncated: space.truncated,
        }
    }

    /// Steps `u → v` with both ends among `descendants`, optionally restricted to redexes
    /// below argument `first_index` of the root.
    pub fn restricted_steps(
        &self,
        descendants: &Descendants,
        mode: RelationMode,
        first_index: Option<usize>,
    ) -> Vec<(Term, Step)> {
        descendants
            .terms
            .iter()
            .flat_map(|u| self.successors(u, mode).into_iter().map(move |step| (u.clone(), step)))
            .filter(|(_, step)| {
                first_index.is_none_or(|k| step.position.first() == Some(k)) && descendants.contains(&step.result)
            })
            .collect()
    }
}

/// An explicitly explored fragment of the reduction graph.
pub(crate) struct StateSpace {
    pub nodes: Vec<Term>,
    /// `parents[i]` is the discovering edge of node `i` (none for the start).
    pub parents: Vec<Option<(usize, Step)>>,
    /// Outgoing edges of fully expanded nodes.
    pub edges: Vec<Vec<(usize, Step)>>,
    pub mode: RelationMode,
    pub truncated: bool,
    pub hit: Option<usize>,
}

impl StateSpace {
    /// Breadth-first exploration from `start` until `stop` holds for a discovered term, the
    /// graph is exhausted, or `fuel` distinct terms have been discovered.
    pub fn explore(
        trs: &Trs,
        start: &Term,
        mode: RelationMode,
        fuel: usize,
        mut stop: impl FnMut(&Term) -> bool,
    ) -> StateSpace {
        let mut space = StateSpace {
            nodes: vec![start.clone()],
            parents: vec![None],
            edges: Vec::new(),
            mode,
            truncated: false,
            hit: None,
        };
        if stop(start) {
            space.hit = Some(0);
            return space;
        }
        if fuel == 0 {
            space.truncated = true;
            return space;
        }
        let mut index: HashMap<Term, usize> = HashMap::from([(start.clone(), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(id) = queue.pop_front() {
            let mut out = Vec::new();
            for step in trs.successors(&space.nodes[id], mode) {
                let target = match index.get(&step.result) {
                    Some(&known) => known,
                    None => {
                        if space.nodes.len() >= fuel {
                            space.truncated = true;
                            continue;
                        }
                        let fresh = space.nodes.len();
                        index.insert(step.result.clone(), fresh);
                        space.nodes.push(step.result.clone());
                        space.parents.push(Some((id, step.clone())));
                        if stop(&step.result) {
                            space.hit = Some(fresh);
                            return space;
                        }
                        queue.push_back(fresh);
                        fresh
                    }
                };
                out.push((target, step));
            }
            space.edges.push(out);
            debug_assert_eq!(space.edges.len(), id + 1);
        }
        space
    }

    /// The discovery path from the start to node `id`.
    pub fn trace_to(&self, id: usize) -> DerivationTrace {
        let mut steps = Vec::new();
        let mut current = id;
        while let Some((parent, step)) = &self.parents[current] {
            steps.push(step.clone());
            current = *parent;
        }
        steps.reverse();
        DerivationTrace {
            start: self.nodes[0].clone(),
            steps,
            mode: self.mode,
        }
    }
}
