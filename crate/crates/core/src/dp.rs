//! Dependency pairs and innermost dependency chains.
//!
//! Pairs are identified by the rule that produced them and the position of the subterm in
//! that rule's right-hand side ([`DepPairAlt`]); the usual pair-of-terms form
//! ([`DepPair`]) is derived from it. Chains carry one substitution per entry.
//!
//! Two constructions connect chains and derivations:
//!
//! * [`derivation_from_chain`] turns a verified innermost chain prefix into a sequence of
//!   terms linked by innermost derivations, accumulating the rule contexts.
//! * [`chain_from_loop`] goes the other way: starting from an exact innermost cycle it
//!   picks a minimal looping subterm, normalizes it below the root, reads off the rule
//!   applied at the root and the looping subterm of its reduct, and iterates.
//!
//! Nontermination evidence is restricted to exact innermost cycles ([`LoopCertificate`]).
//! Failing to find one within the fuel budget says nothing about termination.

use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::rewriting::{DerivationTrace, RelationMode, StateSpace, Trs};
use crate::subst::{canonical_renaming, rename_apart, Substitution};
use crate::term::{Position, Term, Variable};

/// A dependency pair named by its origin: rule index and position in that rule's rhs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepPairAlt {
    pub rule_index: usize,
    pub position: Position,
}

impl DepPairAlt {
    pub fn new(rule_index: usize, position: Position) -> DepPairAlt {
        DepPairAlt { rule_index, position }
    }
}

impl std::fmt::Display for DepPairAlt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(r{}, {})", self.rule_index, self.position)
    }
}

/// A dependency pair as a pair of terms `⟨lhs, rhs_sub⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepPair {
    pub lhs: Term,
    pub rhs_sub: Term,
}

impl DepPair {
    /// Variables renamed `v1, v2, …` in first-occurrence order over `(lhs, rhs_sub)`.
    pub fn canonical(&self) -> DepPair {
        let rho = canonical_renaming(&[&self.lhs, &self.rhs_sub]);
        DepPair {
            lhs: rho.apply(&self.lhs),
            rhs_sub: rho.apply(&self.rhs_sub),
        }
    }
}

impl std::fmt::Display for DepPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "⟨{}, {}⟩", self.lhs, self.rhs_sub)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainEntry {
    pub pair: DepPairAlt,
    pub substitution: Substitution,
}

impl ChainEntry {
    pub fn new(pair: DepPairAlt, substitution: Substitution) -> ChainEntry {
        ChainEntry { pair, substitution }
    }
}

/// A finite chain prefix: dependency pairs with one substitution each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainWitness {
    pub entries: Vec<ChainEntry>,
}

impl ChainWitness {
    pub fn new(entries: Vec<ChainEntry>) -> ChainWitness {
        ChainWitness { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// An exact innermost cycle `u →i+ u`, reached from some start term by `stem`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopCertificate {
    pub stem: DerivationTrace,
    pub cycle: DerivationTrace,
}

impl LoopCertificate {
    /// The term that rewrites back to itself.
    pub fn start(&self) -> &Term {
        &self.cycle.start
    }

    /// Replays stem and cycle as innermost derivations and checks that the cycle closes.
    pub fn validate(&self, trs: &Trs) -> Result<(), String> {
        if self.stem.mode != RelationMode::Innermost || self.cycle.mode != RelationMode::Innermost {
            return Err("certificate traces must be innermost".into());
        }
        let stem_end = self.stem.replay(trs).map_err(|e| format!("stem {e}"))?;
        if stem_end != self.cycle.start {
            return Err(format!("stem ends in {stem_end}, cycle starts at {}", self.cycle.start));
        }
        if self.cycle.is_empty() {
            return Err("empty cycle".into());
        }
        let end = self.cycle.replay(trs).map_err(|e| format!("cycle {e}"))?;
        if end != self.cycle.start {
            return Err(format!("cycle ends in {end}, not {}", self.cycle.start));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DpError {
    #[error("{pair} is not a dependency pair: {reason}")]
    InvalidDepPair { pair: DepPairAlt, reason: String },
    #[error("index {index} out of range for a chain of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("witness is not an innermost chain: link {index}: {reason}")]
    NotChained { index: usize, reason: String },
    #[error("internal replay failure: {0}")]
    Replay(String),
}

/// Why a link could not be established.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkFailure {
    #[error("{0}")]
    InvalidPair(DpError),
    #[error("instantiated lhs {term} of the {which} pair is not a non-root normal form")]
    LhsNotNrNormal { which: &'static str, term: Term },
    #[error("no derivation from {from} to {to} within fuel {fuel} ({explored} terms explored{})",
        if *.exhaustive { ", reachable set exhausted" } else { "" })]
    NotFound {
        from: Term,
        to: Term,
        fuel: usize,
        explored: usize,
        exhaustive: bool,
    },
    #[error("supplied trace does not connect the pairs: {0}")]
    BadTrace(String),
}

impl LinkFailure {
    pub fn is_not_found(&self) -> bool {
        matches!(self, LinkFailure::NotFound { .. })
    }
}

/// True iff `(rule, position)` names a defined-rooted application in the rule's rhs.
pub fn is_dep_pair_alt(trs: &Trs, pair: &DepPairAlt) -> bool {
    check_dep_pair_alt(trs, pair).is_ok()
}

fn check_dep_pair_alt<'a>(trs: &'a Trs, pair: &DepPairAlt) -> Result<&'a Term, DpError> {
    let invalid = |reason: String| DpError::InvalidDepPair {
        pair: pair.clone(),
        reason,
    };
    let rule = trs
        .rule(pair.rule_index)
        .ok_or_else(|| invalid(format!("the system has {} rules", trs.rules().len())))?;
    let sub = rule
        .rhs()
        .get(&pair.position)
        .ok_or_else(|| invalid(format!("{} is not a position of {}", pair.position, rule.rhs())))?;
    let symbol = sub.root_symbol().map_err(|_| invalid(format!("{sub} is a variable")))?;
    if !trs.is_defined(symbol) {
        return Err(invalid(format!("{symbol} is not a defined symbol")));
    }
    Ok(sub)
}

/// All dependency pairs, ordered by rule index then rhs position in pre-order.
pub fn dep_pairs_alt(trs: &Trs) -> Vec<DepPairAlt> {
    let defined = trs.defined_symbols();
    let mut out = Vec::new();
    for rule in trs.rules() {
        for position in rule.rhs().positions() {
            let sub = rule.rhs().get(&position).expect("own position");
            if sub.root_symbol().is_ok_and(|f| defined.contains(f)) {
                out.push(DepPairAlt::new(rule.index(), position));
            }
        }
    }
    out
}

/// `⟨lhs(rule), rhs(rule)|position⟩`.
pub fn to_standard(trs: &Trs, pair: &DepPairAlt) -> Result<DepPair, DpError> {
    let sub = check_dep_pair_alt(trs, pair)?;
    Ok(DepPair {
        lhs: trs.rule(pair.rule_index).expect("checked").lhs().clone(),
        rhs_sub: sub.clone(),
    })
}

/// Standard pairs in extraction order; with `dedup`, pairs equal up to variable renaming
/// are kept once (first occurrence).
pub fn standard_dep_pairs(trs: &Trs, dedup: bool) -> Vec<DepPair> {
    let all = dep_pairs_alt(trs)
        .into_iter()
        .map(|d| to_standard(trs, &d).expect("extracted pairs are valid"));
    if !dedup {
        return all.collect();
    }
    let mut seen = BTreeSet::new();
    all.filter(|p| seen.insert(p.canonical())).collect()
}

fn instances(trs: &Trs, entry: &ChainEntry) -> Result<(Term, Term), DpError> {
    let sub = check_dep_pair_alt(trs, &entry.pair)?;
    let rule = trs.rule(entry.pair.rule_index).expect("checked");
    Ok((entry.substitution.apply(rule.lhs()), entry.substitution.apply(sub)))
}

fn link_mode(innermost: bool) -> RelationMode {
    if innermost {
        RelationMode::NonRootInnermost
    } else {
        RelationMode::NonRoot
    }
}

/// Checks the side condition of innermost links: both instantiated lhs are nr-normal.
fn check_lhs_normal(trs: &Trs, first_lhs: &Term, second_lhs: &Term) -> Result<(), LinkFailure> {
    for (which, term) in [("first", first_lhs), ("second", second_lhs)] {
        if !trs.is_nr_normal(term) {
            return Err(LinkFailure::LhsNotNrNormal {
                which,
                term: term.clone(),
            });
        }
    }
    Ok(())
}

/// Whether `(first, σ1)` and `(second, σ2)` are chained: the instantiated rhs subterm of
/// the first derives to the instantiated lhs of the second by non-root steps (non-root
/// innermost steps when `innermost`, which also requires both instantiated lhs to be
/// nr-normal). Substitutions are applied as given; entries are not renamed apart.
pub fn check_chained(
    trs: &Trs,
    first: &ChainEntry,
    second: &ChainEntry,
    innermost: bool,
    fuel: usize,
) -> Result<DerivationTrace, LinkFailure> {
    let (lhs1, sub1) = instances(trs, first).map_err(LinkFailure::InvalidPair)?;
    let (lhs2, _) = instances(trs, second).map_err(LinkFailure::InvalidPair)?;
    check_link_terms(trs, &lhs1, &sub1, &lhs2, innermost, fuel)
}

/// [`check_chained`] on already instantiated terms.
pub fn check_link_terms(
    trs: &Trs,
    first_lhs: &Term,
    first_rhs_sub: &Term,
    second_lhs: &Term,
    innermost: bool,
    fuel: usize,
) -> Result<DerivationTrace, LinkFailure> {
    if innermost {
        check_lhs_normal(trs, first_lhs, second_lhs)?;
    }
    match trs.derives(first_rhs_sub, second_lhs, link_mode(innermost), fuel) {
        crate::rewriting::Reach::Verified(trace) => Ok(trace),
        crate::rewriting::Reach::NotFound {
            fuel,
            explored,
            exhaustive,
        } => Err(LinkFailure::NotFound {
            from: first_rhs_sub.clone(),
            to: second_lhs.clone(),
            fuel,
            explored,
            exhaustive,
        }),
    }
}

/// Checks a link against a supplied derivation instead of searching for one.
pub fn check_chained_with_trace(
    trs: &Trs,
    first: &ChainEntry,
    second: &ChainEntry,
    innermost: bool,
    trace: &DerivationTrace,
) -> Result<(), LinkFailure> {
    let (lhs1, sub1) = instances(trs, first).map_err(LinkFailure::InvalidPair)?;
    let (lhs2, _) = instances(trs, second).map_err(LinkFailure::InvalidPair)?;
    if innermost {
        check_lhs_normal(trs, &lhs1, &lhs2)?;
    }
    if trace.mode != link_mode(innermost) {
        return Err(LinkFailure::BadTrace(format!("trace uses the {} relation", trace.mode)));
    }
    if trace.start != sub1 {
        return Err(LinkFailure::BadTrace(format!(
            "trace starts at {}, not {sub1}",
            trace.start
        )));
    }
    let end = trace.replay(trs).map_err(|e| LinkFailure::BadTrace(e.to_string()))?;
    if end != lhs2 {
        return Err(LinkFailure::BadTrace(format!("trace ends at {end}, not {lhs2}")));
    }
    Ok(())
}

/// The earliest failing link of a chain prefix.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("link {index}: {reason}")]
pub struct ChainFailure {
    pub index: usize,
    pub reason: LinkFailure,
}

/// Checks every consecutive link; returns one derivation per link.
pub fn verify_chain_prefix(
    trs: &Trs,
    witness: &ChainWitness,
    innermost: bool,
    fuel: usize,
) -> Result<Vec<DerivationTrace>, ChainFailure> {
    witness
        .entries
        .windows(2)
        .enumerate()
        .map(|(index, pair)| {
            check_chained(trs, &pair[0], &pair[1], innermost, fuel).map_err(|reason| ChainFailure { index, reason })
        })
        .collect()
}

/// A witness in the single-substitution form: each entry's rule variables renamed apart
/// from all other entries, and one substitution covering all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenamedChain {
    /// Renamed `(lhs, rhs subterm)` per entry.
    pub pairs: Vec<DepPair>,
    pub substitution: Substitution,
}

/// Renames each entry's rule variables apart from those of earlier entries and merges the
/// per-entry substitutions into one.
pub fn rename_apart_witness(trs: &Trs, witness: &ChainWitness) -> Result<RenamedChain, DpError> {
    let mut used: BTreeSet<Variable> = BTreeSet::new();
    let mut pairs = Vec::with_capacity(witness.len());
    let mut global = Substitution::new();
    for entry in &witness.entries {
        let pair = to_standard(trs, &entry.pair)?;
        let rule = trs.rule(entry.pair.rule_index).expect("checked");
        let (_, renaming) = rename_apart(rule.lhs(), &used);
        let rule_vars = rule.vars();
        for var in &rule_vars {
            let renamed = match renaming.get(var) {
                Some(Term::Var(v)) => v.clone(),
                _ => var.clone(),
            };
            let value = entry
                .substitution
                .get(var)
                .cloned()
                .unwrap_or_else(|| Term::Var(var.clone()));
            global.bind(renamed.clone(), value);
            used.insert(renamed);
        }
        pairs.push(DepPair {
            lhs: renaming.apply(&pair.lhs),
            rhs_sub: renaming.apply(&pair.rhs_sub),
        });
    }
    Ok(RenamedChain {
        pairs,
        substitution: global,
    })
}

/// Verifies a renamed chain under its single substitution.
pub fn verify_renamed_chain(
    trs: &Trs,
    chain: &RenamedChain,
    innermost: bool,
    fuel: usize,
) -> Result<Vec<DerivationTrace>, ChainFailure> {
    let sigma = &chain.substitution;
    chain
        .pairs
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            check_link_terms(
                trs,
                &sigma.apply(&w[0].lhs),
                &sigma.apply(&w[0].rhs_sub),
                &sigma.apply(&w[1].lhs),
                innermost,
                fuel,
            )
            .map_err(|reason| ChainFailure { index, reason })
        })
        .collect()
}

/// The accumulated context and hole position for entries `0..=i`:
/// `(rhs0σ0, π0)`, then `(C[π ← rhs_iσ_i], π·π_i)`.
pub fn term_pos_dps_alt(trs: &Trs, witness: &ChainWitness, i: usize) -> Result<(Term, Position), DpError> {
    if i >= witness.len() {
        return Err(DpError::IndexOutOfRange {
            index: i,
            len: witness.len(),
        });
    }
    Ok(accumulated_contexts(trs, &witness.entries[..=i])?
        .pop()
        .expect("nonempty"))
}

/// [`term_pos_dps_alt`] for every prefix, in one pass.
pub fn accumulated_contexts(trs: &Trs, entries: &[ChainEntry]) -> Result<Vec<(Term, Position)>, DpError> {
    let mut out: Vec<(Term, Position)> = Vec::with_capacity(entries.len());
    for entry in entries {
        check_dep_pair_alt(trs, &entry.pair)?;
        let rhs = entry
            .substitution
            .apply(trs.rule(entry.pair.rule_index).expect("checked").rhs());
        let next = match out.last() {
            None => (rhs, entry.pair.position.clone()),
            Some((context, hole)) => (
                context
                    .replace_at(hole, rhs)
                    .map_err(|e| DpError::Replay(e.to_string()))?,
                hole.concat(&entry.pair.position),
            ),
        };
        debug_assert!(next.0.is_position(&next.1));
        out.push(next);
    }
    Ok(out)
}

/// An innermost derivation assembled from a chain prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDerivation {
    /// `term_pos_dps_alt(i)` for every entry.
    pub contexts: Vec<(Term, Position)>,
    /// `links[i]` is a nonempty innermost derivation from `contexts[i].0` to `contexts[i+1].0`.
    pub links: Vec<DerivationTrace>,
}

impl ChainDerivation {
    pub fn terms(&self) -> Vec<&Term> {
        self.contexts.iter().map(|(t, _)| t).collect()
    }
}

/// Builds the innermost derivation induced by a verified innermost chain prefix.
///
/// Link `i` is the chain derivation of link `i` replayed inside the accumulated context at
/// the hole, followed by one step of rule `i+1` at the hole. Every link is replayed against
/// `trs` before it is returned.
pub fn derivation_from_chain(trs: &Trs, witness: &ChainWitness, fuel: usize) -> Result<ChainDerivation, DpError> {
    let chain_traces = verify_chain_prefix(trs, witness, true, fuel).map_err(|f| DpError::NotChained {
        index: f.index,
        reason: f.reason.to_string(),
    })?;
    let contexts = accumulated_contexts(trs, &witness.entries)?;
    let mut links = Vec::with_capacity(chain_traces.len());
    for (i, chain_trace) in chain_traces.into_iter().enumerate() {
        let (context, hole) = &contexts[i];
        let mut link = chain_trace
            .embed(context, hole, RelationMode::Innermost)
            .map_err(|e| DpError::Replay(e.to_string()))?;
        let next = &witness.entries[i + 1];
        let rule = trs.rule(next.pair.rule_index).expect("checked");
        let at_hole = link.end().clone();
        let root_step = trs
            .reduce_at(&at_hole, hole, RelationMode::Innermost)
            .ok()
            .flatten()
            .filter(|s| s.rule_index == rule.index())
            .map(Ok)
            .unwrap_or_else(|| {
                // Another rule may come first at this redex; the chained rule applies anyway.
                let sigma = next.substitution.restrict(&rule.vars());
                let result = at_hole
                    .replace_at(hole, sigma.apply(rule.rhs()))
                    .map_err(|e| DpError::Replay(e.to_string()))?;
                Ok(crate::rewriting::Step {
                    position: hole.clone(),
                    rule_index: rule.index(),
                    substitution: sigma,
                    result,
                })
            })?;
        link.steps.push(root_step);
        let end = link
            .replay(trs)
            .map_err(|e| DpError::Replay(format!("link {i}: {e}")))?;
        if end != contexts[i + 1].0 {
            return Err(DpError::Replay(format!(
                "link {i} ends in {end}, expected {}",
                contexts[i + 1].0
            )));
        }
        links.push(link);
    }
    Ok(ChainDerivation { contexts, links })
}

/// Searches the innermost reduction graph from `start` (at most `fuel` terms) for a term
/// that innermost-rewrites back to itself. `None` is not a termination claim.
pub fn detect_innermost_loop(trs: &Trs, start: &Term, fuel: usize) -> Option<LoopCertificate> {
    let space = StateSpace::explore(trs, start, RelationMode::Innermost, fuel, |_| false);
    let mut graph: DiGraph<(), usize> = DiGraph::new();
    let ids: Vec<NodeIndex> = (0..space.nodes.len()).map(|_| graph.add_node(())).collect();
    for (from, out) in space.edges.iter().enumerate() {
        for (k, (to, _)) in out.iter().enumerate() {
            graph.add_edge(ids[from], ids[*to], k);
        }
    }
    let mut component = vec![usize::MAX; space.nodes.len()];
    let mut cyclic = vec![false; space.nodes.len()];
    for (c, scc) in tarjan_scc(&graph).into_iter().enumerate() {
        let looping = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        for node in scc {
            component[node.index()] = c;
            cyclic[node.index()] = looping;
        }
    }
    // The earliest discovered node on a cycle, so the stem is as short as possible.
    let anchor = (0..space.nodes.len()).find(|&n| cyclic[n])?;
    let cycle = shortest_cycle(&space, &component, anchor);
    Some(LoopCertificate {
        stem: space.trace_to(anchor),
        cycle,
    })
}

/// Breadth-first search inside the strongly connected component of `anchor` for the
/// shortest nonempty path back to `anchor`.
fn shortest_cycle(space: &StateSpace, component: &[usize], anchor: usize) -> DerivationTrace {
    let c = component[anchor];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; space.nodes.len()];
    let mut seen = vec![false; space.nodes.len()];
    let mut queue = std::collections::VecDeque::from([anchor]);
    let mut closing: Option<(usize, usize)> = None;
    'search: while let Some(node) = queue.pop_front() {
        for (k, (to, _)) in space.edges[node].iter().enumerate() {
            if *to == anchor {
                closing = Some((node, k));
                break 'search;
            }
            if component[*to] == c && !seen[*to] {
                seen[*to] = true;
                parent[*to] = Some((node, k));
                queue.push_back(*to);
            }
        }
    }
    let (mut node, k) = closing.expect("anchor lies on a cycle");
    let mut steps = vec![space.edges[node][k].1.clone()];
    while node != anchor {
        let (prev, k) = parent[node].expect("reached by search");
        steps.push(space.edges[prev][k].1.clone());
        node = prev;
    }
    steps.reverse();
    DerivationTrace {
        start: space.nodes[anchor].clone(),
        steps,
        mode: RelationMode::Innermost,
    }
}

/// A subterm with a loop certificate none of whose proper subterms has one within `fuel`.
///
/// Arguments are searched first, left to right, so the result is the leftmost minimal
/// looping subterm.
pub fn find_mint_subterm(trs: &Trs, term: &Term, fuel: usize) -> Option<(Position, LoopCertificate)> {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || {
        for (i, arg) in term.args().iter().enumerate() {
            if let Some((position, cert)) = find_mint_subterm(trs, arg, fuel) {
                return Some((Position::new(vec![i + 1]).concat(&position), cert));
            }
        }
        detect_innermost_loop(trs, term, fuel).map(|cert| (Position::root(), cert))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SufficiencyError {
    #[error("{0} is not a non-root normal form")]
    NotNrNormal(Term),
    #[error("no rule applies at the root of {0}")]
    NoRootRule(Term),
    #[error("no reduct of {term} at the root shows a loop certificate within fuel {fuel}")]
    NoMintWithinFuel { term: Term, fuel: usize },
    #[error("{term} shows no innermost loop within fuel {fuel}")]
    NoLoopCertificate { term: Term, fuel: usize },
    #[error("non-root innermost normalization of {term} exhausted fuel {fuel}")]
    FuelExhaustedNormalizing { term: Term, fuel: usize },
    #[error("invalid loop certificate: {0}")]
    InvalidCertificate(String),
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error(transparent)]
    Pair(#[from] DpError),
    #[error("constructed link does not verify: {0}")]
    Link(#[from] LinkFailure),
}

/// The pair, substitution and next looping subterm read off a nr-normal looping term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpSelection {
    pub entry: ChainEntry,
    /// `rhs(rule)σ|position`, carrying `certificate`.
    pub mint: Term,
    pub certificate: LoopCertificate,
}

/// For a nr-normal term, picks the lowest-index rule matching at the root whose reduct has
/// a minimal looping subterm, and returns that rule's pair at the subterm's position.
pub fn dp_and_sub_from_nrnf(trs: &Trs, term: &Term, fuel: usize) -> Result<DpSelection, SufficiencyError> {
    if !trs.is_nr_normal(term) {
        return Err(SufficiencyError::NotNrNormal(term.clone()));
    }
    let mut matched = false;
    for rule in trs.rules() {
        let Some(sigma) = crate::subst::match_term(rule.lhs(), term) else {
            continue;
        };
        matched = true;
        debug_assert!(sigma.is_normal(trs));
        let reduct = sigma.apply(rule.rhs());
        if let Some((position, certificate)) = find_mint_subterm(trs, &reduct, fuel) {
            let pair = DepPairAlt::new(rule.index(), position.clone());
            check_dep_pair_alt(trs, &pair)?;
            let mint = reduct.get(&position).expect("found position").clone();
            return Ok(DpSelection {
                entry: ChainEntry::new(pair, sigma),
                mint,
                certificate,
            });
        }
    }
    if matched {
        Err(SufficiencyError::NoMintWithinFuel {
            term: term.clone(),
            fuel,
        })
    } else {
        Err(SufficiencyError::NoRootRule(term.clone()))
    }
}

/// One step of the chain construction, with the link derivation that justifies it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextLink {
    pub entry: ChainEntry,
    /// Non-root innermost derivation from the current instantiated rhs subterm to the new
    /// instantiated lhs.
    pub link: DerivationTrace,
}

/// Given a pair whose instantiated rhs subterm loops, normalizes that subterm below the
/// root and selects the next pair and substitution. The result is checked to be
/// innermost-chained with the input before it is returned.
pub fn next_dp_and_sub(trs: &Trs, current: &ChainEntry, fuel: usize) -> Result<NextLink, SufficiencyError> {
    let (lhs, sub) = instances(trs, current)?;
    if !trs.is_nr_normal(&lhs) {
        return Err(SufficiencyError::NotNrNormal(lhs));
    }
    if detect_innermost_loop(trs, &sub, fuel).is_none() {
        return Err(SufficiencyError::NoLoopCertificate { term: sub, fuel });
    }
    let link = trs.normalize(&sub, RelationMode::NonRootInnermost, fuel).map_err(|_| {
        SufficiencyError::FuelExhaustedNormalizing {
            term: sub.clone(),
            fuel,
        }
    })?;
    let selection = dp_and_sub_from_nrnf(trs, link.end(), fuel)?;
    check_chained_with_trace(trs, current, &selection.entry, true, &link)?;
    Ok(NextLink {
        entry: selection.entry,
        link,
    })
}

/// A chain prefix built from a loop, with the derivation for each link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopChain {
    pub witness: ChainWitness,
    pub links: Vec<DerivationTrace>,
}

/// Builds an innermost chain prefix of length `k` from an innermost loop: a minimal
/// looping subterm of the loop's term is normalized below the root to give the first pair,
/// and [`next_dp_and_sub`] is iterated for the rest.
pub fn chain_from_loop(
    trs: &Trs,
    certificate: &LoopCertificate,
    k: usize,
    fuel: usize,
) -> Result<LoopChain, SufficiencyError> {
    if k == 0 {
        return Err(SufficiencyError::EmptyChain);
    }
    certificate
        .validate(trs)
        .map_err(SufficiencyError::InvalidCertificate)?;
    let start = certificate.start();
    let (position, _) = find_mint_subterm(trs, start, fuel).ok_or_else(|| SufficiencyError::NoLoopCertificate {
        term: start.clone(),
        fuel,
    })?;
    let mint = start.get(&position).expect("found position");
    let normalized = trs.normalize(mint, RelationMode::NonRootInnermost, fuel).map_err(|_| {
        SufficiencyError::FuelExhaustedNormalizing {
            term: mint.clone(),
            fuel,
        }
    })?;
    let first = dp_and_sub_from_nrnf(trs, normalized.end(), fuel)?;
    let mut entries = vec![first.entry];
    let mut links = Vec::with_capacity(k - 1);
    while entries.len() < k {
        let next = next_dp_and_sub(trs, entries.last().expect("nonempty"), fuel)?;
        entries.push(next.entry);
        links.push(next.link);
    }
    Ok(LoopChain {
        witness: ChainWitness::new(entries),
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ackermann_trs, grow_trs, hg_trs, loop_trs};

    fn zero() -> Term {
        Term::constant("0")
    }
    fn c() -> Term {
        Term::constant("c")
    }
    fn s(t: Term) -> Term {
        Term::apply("s", vec![t])
    }
    fn a(x: Term, y: Term) -> Term {
        Term::apply("a", vec![x, y])
    }
    fn f(t: Term) -> Term {
        Term::apply("f", vec![t])
    }
    fn pos(p: &str) -> Position {
        p.parse().unwrap()
    }
    fn dp(rule: usize, p: &str) -> DepPairAlt {
        DepPairAlt::new(rule, pos(p))
    }
    fn entry(rule: usize, p: &str, sigma: Substitution) -> ChainEntry {
        ChainEntry::new(dp(rule, p), sigma)
    }
    fn sub(bindings: &[(&str, Term)]) -> Substitution {
        bindings
            .iter()
            .fold(Substitution::new(), |s, (v, t)| s.with(v, t.clone()))
    }

    /// {p(x) → q(r(x)), r(x) → r(x)}: the rhs of the first rule loops at position 1.
    fn nested_loop_trs() -> Trs {
        let x = Term::var("x");
        let r = |t: Term| Term::apply("r", vec![t]);
        Trs::new(vec![
            (Term::apply("p", vec![x.clone()]), Term::apply("q", vec![r(x.clone())])),
            (r(x.clone()), r(x)),
        ])
        .unwrap()
    }

    /// {p(x) → q(p(x))} with `q` a constructor.
    fn growing_context_trs() -> Trs {
        let x = Term::var("x");
        let p = |t: Term| Term::apply("p", vec![t]);
        Trs::new(vec![(p(x.clone()), Term::apply("q", vec![p(x)]))]).unwrap()
    }

    #[test]
    fn ackermann_pairs() {
        assert_eq!(
            dep_pairs_alt(&ackermann_trs()),
            vec![dp(1, "ε"), dp(2, "ε"), dp(2, "2")]
        );
    }

    #[test]
    fn hg_pairs() {
        // r0: h(x,y) -> h(g(x,y),g(g(x,y),y)); r1: h(x,y) -> g(x,y); r2: g(x,y) -> y
        assert_eq!(
            dep_pairs_alt(&hg_trs()),
            vec![dp(0, "ε"), dp(0, "1"), dp(0, "2"), dp(0, "2.1"), dp(1, "ε")]
        );
    }

    #[test]
    fn constructor_rooted_rhs_has_no_pairs() {
        let y = Term::var("y");
        let trs = Trs::new(vec![(a(zero(), y.clone()), s(y))]).unwrap();
        assert!(dep_pairs_alt(&trs).is_empty());
    }

    #[test]
    fn standard_forms() {
        let trs = ackermann_trs();
        let x = Term::var("x");
        let y = Term::var("y");
        assert_eq!(
            to_standard(&trs, &dp(2, "2")).unwrap(),
            DepPair {
                lhs: a(s(x.clone()), s(y.clone())),
                rhs_sub: a(s(x.clone()), y.clone())
            }
        );
        assert_eq!(
            to_standard(&trs, &dp(1, "ε")).unwrap(),
            DepPair {
                lhs: a(s(x.clone()), zero()),
                rhs_sub: a(x.clone(), s(zero()))
            }
        );
        let hg = hg_trs();
        let g = Term::apply("g", vec![x.clone(), y.clone()]);
        let h = Term::apply("h", vec![x, y]);
        assert_eq!(to_standard(&hg, &dp(1, "ε")).unwrap(), DepPair { lhs: h, rhs_sub: g });
        assert!(to_standard(&trs, &dp(0, "ε")).is_err());
        assert!(to_standard(&trs, &dp(7, "ε")).is_err());
    }

    #[test]
    fn dedup_modulo_renaming() {
        assert_eq!(standard_dep_pairs(&ackermann_trs(), true).len(), 3);
        let hg = hg_trs();
        let all = standard_dep_pairs(&hg, false);
        assert_eq!(all.len(), 5);
        let x = Term::var("x");
        let y = Term::var("y");
        let target = DepPair {
            lhs: Term::apply("h", vec![x.clone(), y.clone()]),
            rhs_sub: Term::apply("g", vec![x, y]),
        };
        assert_eq!(all.iter().filter(|p| **p == target).count(), 3);
        assert_eq!(standard_dep_pairs(&hg, true).len(), 3);
    }

    #[test]
    fn chained_examples() {
        let trs = ackermann_trs();
        let first = entry(2, "2", sub(&[("x", zero()), ("y", s(zero()))]));
        let second = entry(2, "2", sub(&[("x", zero()), ("y", zero())]));
        let trace = check_chained(&trs, &first, &second, true, 10_000).unwrap();
        assert!(trace.is_empty());
        assert_eq!(trace.start, a(s(zero()), s(zero())));

        let first = entry(2, "ε", sub(&[("x", s(zero())), ("y", zero())]));
        let second = entry(2, "ε", sub(&[("x", zero()), ("y", a(s(zero()), zero()))]));
        let trace = check_chained(&trs, &first, &second, false, 10_000).unwrap();
        assert_eq!(trace.replay(&trs).unwrap(), a(s(zero()), s(a(s(zero()), zero()))));

        let e = entry(1, "ε", sub(&[("x", zero())]));
        let err = check_chained(&trs, &e, &e, true, 1000).unwrap_err();
        assert!(matches!(err, LinkFailure::NotFound { exhaustive: true, .. }));
    }

    #[test]
    fn innermost_link_needs_normal_lhs_instances() {
        let trs = ackermann_trs();
        let first = entry(2, "2", sub(&[("x", zero()), ("y", s(zero()))]));
        let bad = entry(2, "2", sub(&[("x", zero()), ("y", a(zero(), zero()))]));
        let err = check_chained(&trs, &first, &bad, true, 100).unwrap_err();
        assert!(matches!(err, LinkFailure::LhsNotNrNormal { which: "second", .. }));
        let failure = verify_chain_prefix(&trs, &ChainWitness::new(vec![first, bad]), true, 100).unwrap_err();
        assert_eq!(failure.index, 0);
    }

    #[test]
    fn chain_prefixes() {
        let trs = ackermann_trs();
        assert!(verify_chain_prefix(&trs, &ChainWitness::default(), true, 10)
            .unwrap()
            .is_empty());
        let one = ChainWitness::new(vec![entry(1, "ε", Substitution::new())]);
        assert!(verify_chain_prefix(&trs, &one, true, 10).unwrap().is_empty());

        let s1 = sub(&[("x", zero()), ("y", s(zero()))]);
        let s2 = sub(&[("x", zero()), ("y", zero())]);
        // Alternating substitutions: the second link a(s(0),s(0)) -> a(s(0),s(s(0))) fails.
        let alternating: Vec<_> = (0..5)
            .map(|i| entry(2, "2", if i % 2 == 0 { s1.clone() } else { s2.clone() }))
            .collect();
        let failure = verify_chain_prefix(&trs, &ChainWitness::new(alternating), true, 1000).unwrap_err();
        assert_eq!(failure.index, 1);
        // Decreasing second argument chains.
        let decreasing: Vec<_> = (0..5)
            .rev()
            .map(|k| entry(2, "2", sub(&[("x", zero()), ("y", crate::term::numeral("s", "0", k))])))
            .collect();
        let traces = verify_chain_prefix(&trs, &ChainWitness::new(decreasing), true, 1000).unwrap();
        assert_eq!(traces.len(), 4);
    }

    #[test]
    fn accumulated_positions() {
        let trs = ackermann_trs();
        let w = ChainWitness::new(vec![
            entry(2, "2", sub(&[("x", zero()), ("y", s(zero()))])),
            entry(2, "2", sub(&[("x", zero()), ("y", zero())])),
        ]);
        assert_eq!(
            term_pos_dps_alt(&trs, &w, 0).unwrap(),
            (a(zero(), a(s(zero()), s(zero()))), pos("2"))
        );
        assert_eq!(
            term_pos_dps_alt(&trs, &w, 1).unwrap(),
            (a(zero(), a(zero(), a(s(zero()), zero()))), pos("2.2"))
        );
        assert!(matches!(
            term_pos_dps_alt(&trs, &w, 2),
            Err(DpError::IndexOutOfRange { index: 2, len: 2 })
        ));

        let lp = loop_trs();
        let w = ChainWitness::new(vec![entry(0, "ε", sub(&[("x", c())])); 2]);
        assert_eq!(term_pos_dps_alt(&lp, &w, 1).unwrap(), (f(c()), Position::root()));
    }

    #[test]
    fn necessity_construction() {
        let trs = ackermann_trs();
        let w = ChainWitness::new(vec![
            entry(2, "2", sub(&[("x", zero()), ("y", s(zero()))])),
            entry(2, "2", sub(&[("x", zero()), ("y", zero())])),
        ]);
        let d = derivation_from_chain(&trs, &w, 1000).unwrap();
        assert_eq!(d.links.len(), 1);
        assert_eq!(d.links[0].len(), 1);
        assert_eq!(d.links[0].steps[0].position, pos("2"));
        assert_eq!(d.links[0].start, a(zero(), a(s(zero()), s(zero()))));
        assert_eq!(d.links[0].end(), &a(zero(), a(zero(), a(s(zero()), zero()))));

        let lp = loop_trs();
        let w = ChainWitness::new(vec![entry(0, "ε", sub(&[("x", c())])); 3]);
        let d = derivation_from_chain(&lp, &w, 100).unwrap();
        assert_eq!(d.terms(), vec![&f(c()); 3]);
        assert!(d.links.iter().all(|l| l.len() == 1));

        let bad = ChainWitness::new(vec![
            entry(1, "ε", sub(&[("x", zero())])),
            entry(1, "ε", sub(&[("x", zero())])),
        ]);
        assert!(matches!(
            derivation_from_chain(&trs, &bad, 100),
            Err(DpError::NotChained { index: 0, .. })
        ));
    }

    #[test]
    fn loop_detection() {
        let lp = loop_trs();
        let cert = detect_innermost_loop(&lp, &f(c()), 100).unwrap();
        assert_eq!(cert.cycle.len(), 1);
        assert_eq!(cert.start(), &f(c()));
        cert.validate(&lp).unwrap();

        assert!(detect_innermost_loop(&ackermann_trs(), &a(s(zero()), s(zero())), 10_000).is_none());
        let g0 = Term::apply("g", vec![zero()]);
        assert!(detect_innermost_loop(&grow_trs(), &g0, 100).is_none());
    }

    #[test]
    fn loop_reached_through_a_stem() {
        // b -> f(c) then f(c) loops
        let x = Term::var("x");
        let trs = Trs::new(vec![(f(x.clone()), f(x)), (Term::constant("b"), f(c()))]).unwrap();
        let cert = detect_innermost_loop(&trs, &Term::constant("b"), 100).unwrap();
        assert_eq!(cert.stem.len(), 1);
        assert_eq!(cert.start(), &f(c()));
        cert.validate(&trs).unwrap();
    }

    #[test]
    fn minimal_looping_subterms() {
        let lp = loop_trs();
        let h = Term::apply("h", vec![f(c())]);
        assert_eq!(find_mint_subterm(&lp, &h, 100).unwrap().0, pos("1"));
        assert_eq!(find_mint_subterm(&lp, &f(c()), 100).unwrap().0, Position::root());
        assert!(find_mint_subterm(&ackermann_trs(), &a(zero(), zero()), 1000).is_none());
        // f(f(c)): the inner f(c) is minimal.
        assert_eq!(find_mint_subterm(&lp, &f(f(c())), 100).unwrap().0, pos("1"));
    }

    #[test]
    fn selection_from_nr_normal_terms() {
        let lp = loop_trs();
        let sel = dp_and_sub_from_nrnf(&lp, &f(c()), 100).unwrap();
        assert_eq!(sel.entry, entry(0, "ε", sub(&[("x", c())])));
        assert_eq!(sel.mint, f(c()));

        let nested = nested_loop_trs();
        let p = Term::apply("p", vec![c()]);
        let sel = dp_and_sub_from_nrnf(&nested, &p, 100).unwrap();
        assert_eq!(sel.entry, entry(0, "1", sub(&[("x", c())])));
        assert_eq!(sel.mint, Term::apply("r", vec![c()]));

        // p(c) ->i q(p(c)) ->i q(q(p(c))) ... never repeats a term.
        let growing = growing_context_trs();
        assert!(matches!(
            dp_and_sub_from_nrnf(&growing, &p, 100),
            Err(SufficiencyError::NoMintWithinFuel { .. })
        ));

        assert!(matches!(
            dp_and_sub_from_nrnf(&ackermann_trs(), &a(zero(), zero()), 1000),
            Err(SufficiencyError::NoMintWithinFuel { .. })
        ));
        assert!(matches!(
            dp_and_sub_from_nrnf(&ackermann_trs(), &s(zero()), 1000),
            Err(SufficiencyError::NoRootRule(_))
        ));
        assert!(matches!(
            dp_and_sub_from_nrnf(&ackermann_trs(), &a(a(zero(), zero()), zero()), 1000),
            Err(SufficiencyError::NotNrNormal(_))
        ));
    }

    #[test]
    fn next_pair_iteration() {
        let lp = loop_trs();
        let e = entry(0, "ε", sub(&[("x", c())]));
        let next = next_dp_and_sub(&lp, &e, 100).unwrap();
        assert_eq!(next.entry, e);

        let nested = nested_loop_trs();
        let e = entry(1, "ε", sub(&[("x", c())]));
        assert_eq!(next_dp_and_sub(&nested, &e, 100).unwrap().entry, e);

        let trs = ackermann_trs();
        let e = entry(1, "ε", sub(&[("x", zero())]));
        assert!(matches!(
            next_dp_and_sub(&trs, &e, 1000),
            Err(SufficiencyError::NoLoopCertificate { .. })
        ));
    }

    #[test]
    fn sufficiency_pipeline() {
        let lp = loop_trs();
        let cert = detect_innermost_loop(&lp, &f(c()), 100).unwrap();
        let chain = chain_from_loop(&lp, &cert, 5, 100).unwrap();
        assert_eq!(chain.witness.entries, vec![entry(0, "ε", sub(&[("x", c())])); 5]);
        verify_chain_prefix(&lp, &chain.witness, true, 100).unwrap();

        let single = chain_from_loop(&lp, &cert, 1, 100).unwrap();
        assert_eq!(single.witness.len(), 1);
        assert!(matches!(
            chain_from_loop(&lp, &cert, 0, 100),
            Err(SufficiencyError::EmptyChain)
        ));

        let mut forged = cert.clone();
        forged.cycle.steps.clear();
        assert!(matches!(
            chain_from_loop(&lp, &forged, 2, 100),
            Err(SufficiencyError::InvalidCertificate(_))
        ));
    }

    #[test]
    fn sufficiency_through_nested_pairs() {
        let nested = nested_loop_trs();
        let p = Term::apply("p", vec![c()]);
        let cert = detect_innermost_loop(&nested, &p, 100).unwrap();
        assert_eq!(cert.start(), &Term::apply("q", vec![Term::apply("r", vec![c()])]));
        let chain = chain_from_loop(&nested, &cert, 3, 100).unwrap();
        assert!(chain.witness.entries.iter().all(|e| e.pair == dp(1, "ε")));
        verify_chain_prefix(&nested, &chain.witness, true, 100).unwrap();
    }

    #[test]
    fn renamed_witness_verifies_like_the_original() {
        let trs = ackermann_trs();
        let w = ChainWitness::new(vec![
            entry(2, "ε", sub(&[("x", s(zero())), ("y", zero())])),
            entry(2, "ε", sub(&[("x", zero()), ("y", a(s(zero()), zero()))])),
        ]);
        let renamed = rename_apart_witness(&trs, &w).unwrap();
        let first_vars = renamed.pairs[0].lhs.vars();
        assert!(renamed.pairs[1].lhs.vars().is_disjoint(&first_vars));
        let traces = verify_renamed_chain(&trs, &renamed, false, 10_000).unwrap();
        assert_eq!(traces, verify_chain_prefix(&trs, &w, false, 10_000).unwrap());
    }
}
