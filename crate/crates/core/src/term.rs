//! First-order terms over a declared signature, positions, subterm access and replacement.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position {position} is not a position of {term}")]
    InvalidPosition { position: Position, term: String },
    #[error("{0} is a variable, not an application")]
    NotAnApplication(String),
    #[error("symbol {name}/{arity} applied to {given} arguments")]
    ArityMismatch { name: String, arity: usize, given: usize },
    #[error("malformed position `{0}`")]
    MalformedPosition(String),
}

/// A function symbol together with its arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    arity: usize,
}

impl Symbol {
    pub fn new(name: &str, arity: usize) -> Symbol {
        assert!(!name.is_empty(), "symbol names must be nonempty");
        Symbol {
            name: name.into(),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: &str) -> Variable {
        assert!(!name.is_empty(), "variable names must be nonempty");
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of symbols with pairwise distinct names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Adds `symbol`, failing if the name is already declared with another arity.
    pub fn declare(&mut self, symbol: &Symbol) -> Result<(), TermError> {
        match self.arities.get(symbol.name()) {
            Some(&arity) if arity != symbol.arity() => Err(TermError::ArityMismatch {
                name: symbol.name().to_string(),
                arity,
                given: symbol.arity(),
            }),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(symbol.name().to_string(), symbol.arity());
                Ok(())
            }
        }
    }

    /// Declares every symbol occurring in `term`.
    pub fn declare_term(&mut self, term: &Term) -> Result<(), TermError> {
        for symbol in term.symbols() {
            self.declare(&symbol)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.arities.get(name).map(|&arity| Symbol::new(name, arity))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arities.contains_key(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.arities.iter().map(|(name, &arity)| Symbol::new(name, arity))
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }
}

/// A position: a sequence of 1-based argument indices. The empty sequence is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    /// Builds a position from 1-based indices; panics on a zero index.
    pub fn new(indices: Vec<usize>) -> Position {
        assert!(indices.iter().all(|&i| i >= 1), "positions are 1-based");
        Position(indices)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The first index, if any.
    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn concat(&self, other: &Position) -> Position {
        let mut indices = self.0.clone();
        indices.extend_from_slice(&other.0);
        Position(indices)
    }

    pub fn child(&self, index: usize) -> Position {
        assert!(index >= 1, "positions are 1-based");
        let mut indices = self.0.clone();
        indices.push(index);
        Position(indices)
    }

    /// True if `self` is a prefix of `other` (including equality).
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }
}

/// Sequence concatenation of positions.
pub fn concat_positions(first: &Position, second: &Position) -> Position {
    first.concat(second)
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl FromStr for Position {
    type Err = TermError;

    /// Parses `ε`, the empty string, or dot-separated positive integers.
    fn from_str(s: &str) -> Result<Position, TermError> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Position::root());
        }
        s.split('.')
            .map(|part| match part.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i),
                _ => Err(TermError::MalformedPosition(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
    }
}

/// A first-order term. Application nodes always carry exactly `arity` arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Variable),
    /// Arguments are shared, so cloning a term is cheap.
    App(Symbol, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Variable::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Symbol::new(name, 0), Arc::from([]))
    }

    /// Applies `symbol` to `args`, checking the arity.
    pub fn app(symbol: Symbol, args: Vec<Term>) -> Result<Term, TermError> {
        if symbol.arity() != args.len() {
            return Err(TermError::ArityMismatch {
                name: symbol.name().to_string(),
                arity: symbol.arity(),
                given: args.len(),
            });
        }
        Ok(Term::App(symbol, args.into()))
    }

    /// Applies a symbol named `name` whose arity is the number of arguments.
    pub fn apply(name: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::new(name, args.len()), args.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_app(&self) -> bool {
        matches!(self, Term::App(..))
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    pub fn root_symbol(&self) -> Result<&Symbol, TermError> {
        match self {
            Term::App(symbol, _) => Ok(symbol),
            Term::Var(_) => Err(TermError::NotAnApplication(self.to_string())),
        }
    }

    /// All positions in depth-first pre-order, root first.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut current = Vec::new();
        self.collect_positions(&mut current, &mut out);
        out
    }

    fn collect_positions(&self, current: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position(current.clone()));
        for (i, arg) in self.args().iter().enumerate() {
            current.push(i + 1);
            arg.collect_positions(current, out);
            current.pop();
        }
    }

    pub fn is_position(&self, position: &Position) -> bool {
        self.get(position).is_some()
    }

    /// The subterm at `position`, or `None` if it is not a position of `self`.
    pub fn get(&self, position: &Position) -> Option<&Term> {
        let mut current = self;
        for &i in position.indices() {
            current = current.args().get(i.checked_sub(1)?)?;
        }
        Some(current)
    }

    pub fn subterm_at(&self, position: &Position) -> Result<&Term, TermError> {
        self.get(position).ok_or_else(|| self.invalid(position))
    }

    /// `self[position <- replacement]`.
    pub fn replace_at(&self, position: &Position, replacement: Term) -> Result<Term, TermError> {
        if !self.is_position(position) {
            return Err(self.invalid(position));
        }
        let mut result = self.clone();
        let mut slot = &mut result;
        for &i in position.indices() {
            slot = match slot {
                Term::App(_, args) => &mut Arc::make_mut(args)[i - 1],
                Term::Var(_) => unreachable!("validated position"),
            };
        }
        *slot = replacement;
        Ok(result)
    }

    fn invalid(&self, position: &Position) -> TermError {
        TermError::InvalidPosition {
            position: position.clone(),
            term: self.to_string(),
        }
    }

    /// The set of variables occurring in the term.
    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars_in_order(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.visit_vars(&mut |v| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        });
        out
    }

    pub(crate) fn visit_vars(&self, f: &mut impl FnMut(&Variable)) {
        match self {
            Term::Var(v) => f(v),
            Term::App(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    /// The distinct symbols occurring in the term.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        if let Term::App(symbol, args) = self {
            out.insert(symbol.clone());
            args.iter().for_each(|a| a.collect_symbols(out));
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    /// Checks that every application node carries `arity` arguments.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::App(symbol, args) => symbol.arity() == args.len() && args.iter().all(Term::is_well_formed),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(symbol, args) if args.is_empty() => write!(f, "{symbol}"),
            Term::App(symbol, args) => {
                write!(f, "{symbol}(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{arg}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// `s^k(0)` over the given successor and zero names.
pub fn numeral(succ: &str, zero: &str, k: usize) -> Term {
    (0..k).fold(Term::constant(zero), |t, _| Term::apply(succ, vec![t]))
}
