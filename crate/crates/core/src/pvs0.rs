//! PVS0: one recursive function over tuples of naturals, with interpreted unary and binary
//! operators, a designated false value, and a fuel-indexed evaluator.
//!
//! Operators are written in a small total guard language ([`Guard`]) so that programs are
//! plain data and can be stored as JSON.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::DepPairAlt;
use crate::rewriting::{RelationMode, Trs};
use crate::subst::match_term;
use crate::term::{numeral, Term};

/// A tuple of naturals. The width is fixed per program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub Vec<u64>);

impl Value {
    pub fn new(components: Vec<u64>) -> Value {
        Value(components)
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, index: usize) -> Option<u64> {
        self.0.get(index).copied()
    }
}

impl From<(u64, u64)> for Value {
    fn from((a, b): (u64, u64)) -> Value {
        Value(vec![a, b])
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `Some(value)`, or `None` for the out-of-fuel/undefined result `⋄`.
pub type EvalResult = Option<Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Pvs0Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("width mismatch in {what}: expected {expected}, found {found}")]
    WidthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("arity mismatch in {what}: expected {expected}, found {found}")]
    ArityMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("ill-sorted guard in {what}: {reason}")]
    Sort { what: String, reason: String },
    #[error("encoding: {0}")]
    Encoding(String),
}

/// Guard-language expressions. Arithmetic is on naturals: `add` saturates, `monus`
/// clamps at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    Nat(u64),
    /// Component `index` (0-based) of argument `arg` (0-based).
    Comp {
        arg: usize,
        index: usize,
    },
    /// A whole argument tuple.
    Arg(usize),
    Add(Box<Guard>, Box<Guard>),
    Monus(Box<Guard>, Box<Guard>),
    Lt(Box<Guard>, Box<Guard>),
    Eq(Box<Guard>, Box<Guard>),
    Tuple(Vec<Guard>),
    /// The program's designated true value.
    Top,
    /// The program's false value.
    Bottom,
    /// A boolean condition, or a tuple tested against the false value.
    If(Box<Guard>, Box<Guard>, Box<Guard>),
}

#[allow(clippy::should_implement_trait)]
impl Guard {
    pub fn comp(arg: usize, index: usize) -> Guard {
        Guard::Comp { arg, index }
    }
    pub fn add(a: Guard, b: Guard) -> Guard {
        Guard::Add(Box::new(a), Box::new(b))
    }
    pub fn monus(a: Guard, b: Guard) -> Guard {
        Guard::Monus(Box::new(a), Box::new(b))
    }
    pub fn lt(a: Guard, b: Guard) -> Guard {
        Guard::Lt(Box::new(a), Box::new(b))
    }
    pub fn eq(a: Guard, b: Guard) -> Guard {
        Guard::Eq(Box::new(a), Box::new(b))
    }
    pub fn ite(c: Guard, t: Guard, e: Guard) -> Guard {
        Guard::If(Box::new(c), Box::new(t), Box::new(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    Nat,
    Bool,
    Tuple,
}

/// Runtime values of guard expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
enum GuardValue {
    Nat(u64),
    Bool(bool),
    Tuple(Value),
}

/// An interpreted operator: arity 1 (an `O1` entry) or 2 (an `O2` entry).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatorDef {
    pub arity: usize,
    pub body: Guard,
}

impl OperatorDef {
    pub fn unary(body: Guard) -> OperatorDef {
        OperatorDef { arity: 1, body }
    }

    pub fn binary(body: Guard) -> OperatorDef {
        OperatorDef { arity: 2, body }
    }
}

/// PVS0 expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pvs0Expr {
    Cnst(Value),
    Vr,
    Op1(usize, Box<Pvs0Expr>),
    Op2(usize, Box<Pvs0Expr>, Box<Pvs0Expr>),
    Rec(Box<Pvs0Expr>),
    Ite(Box<Pvs0Expr>, Box<Pvs0Expr>, Box<Pvs0Expr>),
}

impl Pvs0Expr {
    pub fn cnst(v: impl Into<Value>) -> Pvs0Expr {
        Pvs0Expr::Cnst(v.into())
    }
    pub fn op1(j: usize, e: Pvs0Expr) -> Pvs0Expr {
        Pvs0Expr::Op1(j, Box::new(e))
    }
    pub fn op2(j: usize, a: Pvs0Expr, b: Pvs0Expr) -> Pvs0Expr {
        Pvs0Expr::Op2(j, Box::new(a), Box::new(b))
    }
    pub fn rec(e: Pvs0Expr) -> Pvs0Expr {
        Pvs0Expr::Rec(Box::new(e))
    }
    pub fn ite(c: Pvs0Expr, t: Pvs0Expr, e: Pvs0Expr) -> Pvs0Expr {
        Pvs0Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Subexpressions in order; the operator index is not a child.
    pub fn children(&self) -> Vec<&Pvs0Expr> {
        match self {
            Pvs0Expr::Cnst(_) | Pvs0Expr::Vr => vec![],
            Pvs0Expr::Op1(_, e) | Pvs0Expr::Rec(e) => vec![e],
            Pvs0Expr::Op2(_, a, b) => vec![a, b],
            Pvs0Expr::Ite(c, t, e) => vec![c, t, e],
        }
    }
}

impl fmt::Display for Pvs0Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pvs0Expr::Cnst(v) => write!(f, "cnst{v}"),
            Pvs0Expr::Vr => write!(f, "vr"),
            Pvs0Expr::Op1(j, e) => write!(f, "op1({j}, {e})"),
            Pvs0Expr::Op2(j, a, b) => write!(f, "op2({j}, {a}, {b})"),
            Pvs0Expr::Rec(e) => write!(f, "rec({e})"),
            Pvs0Expr::Ite(c, t, e) => write!(f, "ite({c}, {t}, {e})"),
        }
    }
}

/// `(O1, O2, ⊥, e_f)` together with the value width and a designated true value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pvs0Program {
    pub width: usize,
    pub false_val: Value,
    pub top_val: Value,
    #[serde(rename = "O1")]
    pub o1: Vec<OperatorDef>,
    #[serde(rename = "O2")]
    pub o2: Vec<OperatorDef>,
    pub body: Pvs0Expr,
}

impl Pvs0Program {
    /// Builds a program, checking widths, operator arities and guard sorts. Operator
    /// indices used in the body are not checked; out-of-range indices evaluate to `⋄`.
    pub fn new(
        width: usize,
        false_val: Value,
        top_val: Value,
        o1: Vec<OperatorDef>,
        o2: Vec<OperatorDef>,
        body: Pvs0Expr,
    ) -> Result<Pvs0Program, Pvs0Error> {
        let program = Pvs0Program {
            width,
            false_val,
            top_val,
            o1,
            o2,
            body,
        };
        program.validate()?;
        Ok(program)
    }

    pub fn from_json(text: &str) -> Result<Pvs0Program, Pvs0Error> {
        let program: Pvs0Program = serde_json::from_str(text).map_err(|e| Pvs0Error::Parse(e.to_string()))?;
        program.validate()?;
        Ok(program)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("programs serialize")
    }

    pub fn validate(&self) -> Result<(), Pvs0Error> {
        if self.width == 0 {
            return Err(Pvs0Error::WidthMismatch {
                what: "program width".into(),
                expected: 1,
                found: 0,
            });
        }
        self.check_value("false_val", &self.false_val)?;
        self.check_value("top_val", &self.top_val)?;
        for (list, ops, arity) in [("O1", &self.o1, 1), ("O2", &self.o2, 2)] {
            for (j, op) in ops.iter().enumerate() {
                let what = format!("{list}({j})");
                if op.arity != arity {
                    return Err(Pvs0Error::ArityMismatch {
                        what,
                        expected: arity,
                        found: op.arity,
                    });
                }
                match self.sort_of(&op.body, arity, &what)? {
                    Sort::Tuple | Sort::Bool => {}
                    Sort::Nat => {
                        return Err(Pvs0Error::Sort {
                            what,
                            reason: "an operator must return a tuple or a comparison".into(),
                        })
                    }
                }
            }
        }
        self.check_expr(&self.body)
    }

    pub fn check_value(&self, what: &str, v: &Value) -> Result<(), Pvs0Error> {
        if v.width() != self.width {
            return Err(Pvs0Error::WidthMismatch {
                what: what.into(),
                expected: self.width,
                found: v.width(),
            });
        }
        Ok(())
    }

    /// Checks the widths of the constants in `e`.
    pub fn check_expr(&self, e: &Pvs0Expr) -> Result<(), Pvs0Error> {
        if let Pvs0Expr::Cnst(v) = e {
            self.check_value(&format!("constant {v}"), v)?;
        }
        e.children().into_iter().try_for_each(|c| self.check_expr(c))
    }

    fn sort_of(&self, g: &Guard, arity: usize, what: &str) -> Result<Sort, Pvs0Error> {
        let bad = |reason: String| Pvs0Error::Sort {
            what: what.into(),
            reason,
        };
        let expect = |g: &Guard, sort: Sort| -> Result<(), Pvs0Error> {
            let found = self.sort_of(g, arity, what)?;
            if found == sort {
                Ok(())
            } else {
                Err(bad(format!("expected {sort:?}, found {found:?}")))
            }
        };
        Ok(match g {
            Guard::Nat(_) => Sort::Nat,
            Guard::Comp { arg, index } => {
                if *arg >= arity {
                    return Err(bad(format!("argument {arg} of an arity-{arity} operator")));
                }
                if *index >= self.width {
                    return Err(bad(format!("component {index} of a width-{} tuple", self.width)));
                }
                Sort::Nat
            }
            Guard::Arg(arg) => {
                if *arg >= arity {
                    return Err(bad(format!("argument {arg} of an arity-{arity} operator")));
                }
                Sort::Tuple
            }
            Guard::Add(a, b) | Guard::Monus(a, b) => {
                expect(a, Sort::Nat)?;
                expect(b, Sort::Nat)?;
                Sort::Nat
            }
            Guard::Lt(a, b) | Guard::Eq(a, b) => {
                expect(a, Sort::Nat)?;
                expect(b, Sort::Nat)?;
                Sort::Bool
            }
            Guard::Tuple(items) => {
                if items.len() != self.width {
                    return Err(Pvs0Error::WidthMismatch {
                        what: format!("tuple in {what}"),
                        expected: self.width,
                        found: items.len(),
                    });
                }
                for item in items {
                    expect(item, Sort::Nat)?;
                }
                Sort::Tuple
            }
            Guard::Top | Guard::Bottom => Sort::Tuple,
            Guard::If(c, t, e) => {
                if self.sort_of(c, arity, what)? == Sort::Nat {
                    return Err(bad("a condition must be a comparison or a tuple".into()));
                }
                let st = self.sort_of(t, arity, what)?;
                let se = self.sort_of(e, arity, what)?;
                if st != se {
                    return Err(bad(format!("branches of sorts {st:?} and {se:?}")));
                }
                st
            }
        })
    }

    fn to_tuple(&self, v: GuardValue) -> Value {
        match v {
            GuardValue::Tuple(t) => t,
            GuardValue::Bool(true) => self.top_val.clone(),
            GuardValue::Bool(false) => self.false_val.clone(),
            GuardValue::Nat(_) => unreachable!("sort-checked"),
        }
    }

    fn guard_value(&self, g: &Guard, args: &[&Value]) -> Result<GuardValue, Pvs0Error> {
        let nat = |g: &Guard| -> Result<u64, Pvs0Error> {
            match self.guard_value(g, args)? {
                GuardValue::Nat(n) => Ok(n),
                other => Err(Pvs0Error::Sort {
                    what: "guard".into(),
                    reason: format!("expected a natural, found {other:?}"),
                }),
            }
        };
        Ok(match g {
            Guard::Nat(n) => GuardValue::Nat(*n),
            Guard::Comp { arg, index } => {
                let v = args
                    .get(*arg)
                    .and_then(|a| a.get(*index))
                    .ok_or_else(|| Pvs0Error::Sort {
                        what: "guard".into(),
                        reason: format!("no component {index} of argument {arg}"),
                    })?;
                GuardValue::Nat(v)
            }
            Guard::Arg(arg) => {
                GuardValue::Tuple(args.get(*arg).map(|a| (*a).clone()).ok_or_else(|| Pvs0Error::Sort {
                    what: "guard".into(),
                    reason: format!("no argument {arg}"),
                })?)
            }
            Guard::Add(a, b) => GuardValue::Nat(nat(a)?.saturating_add(nat(b)?)),
            Guard::Monus(a, b) => GuardValue::Nat(nat(a)?.saturating_sub(nat(b)?)),
            Guard::Lt(a, b) => GuardValue::Bool(nat(a)? < nat(b)?),
            Guard::Eq(a, b) => GuardValue::Bool(nat(a)? == nat(b)?),
            Guard::Tuple(items) => GuardValue::Tuple(Value(items.iter().map(nat).collect::<Result<_, _>>()?)),
            Guard::Top => GuardValue::Tuple(self.top_val.clone()),
            Guard::Bottom => GuardValue::Tuple(self.false_val.clone()),
            Guard::If(c, t, e) => {
                let holds = match self.guard_value(c, args)? {
                    GuardValue::Bool(b) => b,
                    GuardValue::Tuple(v) => v != self.false_val,
                    GuardValue::Nat(_) => {
                        return Err(Pvs0Error::Sort {
                            what: "guard".into(),
                            reason: "natural used as a condition".into(),
                        })
                    }
                };
                self.guard_value(if holds { t } else { e }, args)?
            }
        })
    }
}

/// Applies an operator to argument values.
pub fn guard_eval(program: &Pvs0Program, def: &OperatorDef, args: &[&Value]) -> Result<Value, Pvs0Error> {
    if args.len() != def.arity {
        return Err(Pvs0Error::ArityMismatch {
            what: "operator application".into(),
            expected: def.arity,
            found: args.len(),
        });
    }
    for arg in args {
        program.check_value("operator argument", arg)?;
    }
    let v = program.guard_value(&def.body, args)?;
    Ok(program.to_tuple(v))
}

/// The fuel-indexed evaluation function: `⋄` when the fuel is zero, and fuel is consumed
/// only when a recursive call enters the body.
///
/// `e` and `v` are expected to be well formed for `program` ([`Pvs0Program::check_expr`],
/// [`Pvs0Program::check_value`]); operator failures on ill-formed input also give `⋄`.
pub fn chi_eval(program: &Pvs0Program, e: &Pvs0Expr, v: &Value, n: usize) -> EvalResult {
    stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || {
        if n == 0 {
            return None;
        }
        match e {
            Pvs0Expr::Cnst(c) => Some(c.clone()),
            Pvs0Expr::Vr => Some(v.clone()),
            Pvs0Expr::Op1(j, a) => {
                let def = program.o1.get(*j)?;
                let a = chi_eval(program, a, v, n)?;
                guard_eval(program, def, &[&a]).ok()
            }
            Pvs0Expr::Op2(j, a, b) => {
                let def = program.o2.get(*j)?;
                let a = chi_eval(program, a, v, n)?;
                let b = chi_eval(program, b, v, n)?;
                guard_eval(program, def, &[&a, &b]).ok()
            }
            Pvs0Expr::Rec(a) => {
                let arg = chi_eval(program, a, v, n)?;
                chi_eval(program, &program.body, &arg, n - 1)
            }
            Pvs0Expr::Ite(c, t, f) => {
                let cv = chi_eval(program, c, v, n)?;
                if cv != program.false_val {
                    chi_eval(program, t, v, n)
                } else {
                    chi_eval(program, f, v, n)
                }
            }
        }
    })
}

/// Least fuel in `1..=max_fuel` for which `e` evaluates, if any. Relies on fuel
/// monotonicity, so the search is a bisection after one evaluation at `max_fuel`.
pub fn least_fuel(program: &Pvs0Program, e: &Pvs0Expr, v: &Value, max_fuel: usize) -> Option<(usize, Value)> {
    let top = chi_eval(program, e, v, max_fuel)?;
    let (mut lo, mut hi) = (0, max_fuel);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if chi_eval(program, e, v, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((hi, top))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum EpsilonVerdict {
    /// `e` evaluates to the expected value, first at this fuel.
    Holds { fuel: usize },
    /// `e` evaluates to another value; by determinism it never yields the expected one.
    Refuted { actual: Value, fuel: usize },
    /// No value within the fuel budget. Not a refutation.
    UnknownWithinFuel { fuel: usize },
}

/// Whether `e` evaluates from `v_i` to `v_o` for some fuel up to `max_fuel`.
pub fn epsilon_check(program: &Pvs0Program, e: &Pvs0Expr, v_i: &Value, v_o: &Value, max_fuel: usize) -> EpsilonVerdict {
    match least_fuel(program, e, v_i, max_fuel) {
        Some((fuel, actual)) if actual == *v_o => EpsilonVerdict::Holds { fuel },
        Some((fuel, actual)) => EpsilonVerdict::Refuted { actual, fuel },
        None => EpsilonVerdict::UnknownWithinFuel { fuel: max_fuel },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TerminationProbe {
    Terminates { fuel: usize, value: Value },
    UnknownWithinFuel { fuel: usize },
}

/// The least fuel at which the program body evaluates on `v`.
pub fn terminates_on(program: &Pvs0Program, v: &Value, max_fuel: usize) -> TerminationProbe {
    match least_fuel(program, &program.body, v, max_fuel) {
        Some((fuel, value)) => TerminationProbe::Terminates { fuel, value },
        None => TerminationProbe::UnknownWithinFuel { fuel: max_fuel },
    }
}

/// One occurrence of `rec` in the body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallingContext {
    /// 1-based child indices from the body root to the `rec` node.
    pub path: Vec<usize>,
    /// Conditional guards on the path, outermost first, with the branch taken.
    pub condition: Vec<(Pvs0Expr, bool)>,
    pub actual: Pvs0Expr,
}

impl CallingContext {
    pub fn path_string(&self) -> String {
        if self.path.is_empty() {
            return "ε".into();
        }
        self.path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Calling contexts in depth-first order, an enclosing `rec` before those in its argument.
pub fn calling_contexts(program: &Pvs0Program) -> Vec<CallingContext> {
    fn walk(e: &Pvs0Expr, path: &mut Vec<usize>, guards: &mut Vec<(Pvs0Expr, bool)>, out: &mut Vec<CallingContext>) {
        if let Pvs0Expr::Rec(arg) = e {
            out.push(CallingContext {
                path: path.clone(),
                condition: guards.clone(),
                actual: (**arg).clone(),
            });
        }
        for (i, child) in e.children().into_iter().enumerate() {
            let guard = match (e, i) {
                (Pvs0Expr::Ite(c, _, _), 1) => Some(((**c).clone(), true)),
                (Pvs0Expr::Ite(c, _, _), 2) => Some(((**c).clone(), false)),
                _ => None,
            };
            let pushed = guard.is_some();
            guards.extend(guard);
            path.push(i + 1);
            walk(child, path, guards, out);
            path.pop();
            if pushed {
                guards.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(&program.body, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Encodes `(v_1, …, v_k)` as `f(s^{v_1}(0), …, s^{v_k}(0))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalEncoding {
    pub symbol: String,
    pub succ: String,
    pub zero: String,
}

impl NaturalEncoding {
    pub fn new(symbol: &str, succ: &str, zero: &str) -> NaturalEncoding {
        NaturalEncoding {
            symbol: symbol.into(),
            succ: succ.into(),
            zero: zero.into(),
        }
    }

    pub fn encode(&self, v: &Value) -> Term {
        Term::apply(
            &self.symbol,
            v.0.iter()
                .map(|&c| numeral(&self.succ, &self.zero, c as usize))
                .collect(),
        )
    }

    /// Checks the encoding symbol against the system's signature and the program width.
    pub fn check(&self, trs: &Trs, width: usize) -> Result<(), Pvs0Error> {
        if let Some(symbol) = trs.signature().get(&self.symbol) {
            if symbol.arity() != width {
                return Err(Pvs0Error::WidthMismatch {
                    what: format!("encoding symbol {}", self.symbol),
                    expected: width,
                    found: symbol.arity(),
                });
            }
        }
        for (name, arity) in [(&self.succ, 1), (&self.zero, 0)] {
            if let Some(symbol) = trs.signature().get(name) {
                if symbol.arity() != arity {
                    return Err(Pvs0Error::Encoding(format!("{name} has arity {}", symbol.arity())));
                }
            }
        }
        Ok(())
    }
}

/// Why a sample disagrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MismatchKind {
    /// The context condition and the pattern match disagree.
    Condition,
    /// Both sides are defined and the next call's arguments differ.
    Actual,
    /// A guard evaluated to `⋄` within fuel.
    GuardUndefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub sample: Value,
    pub kind: MismatchKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub context: usize,
    pub rule: usize,
    pub position: String,
    /// Samples on which the condition held (and the pattern matched).
    pub applicable: usize,
    /// Applicable samples whose next-call arguments were compared.
    pub actuals_compared: usize,
    pub mismatches: Vec<Mismatch>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CcDpReport {
    pub samples: usize,
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

/// Sample-based check that a calling context and a dependency pair describe the same
/// recursive call. For each sample `v`:
///
/// * the context condition holds on `v` iff the pair's lhs matches `encode(v)`;
/// * where it holds, the actual parameter evaluates to `v'` and the instantiated rhs
///   subterm normalizes below the root, `encode(v')` equals that normal form.
pub fn check_cc_dp_correspondence(
    program: &Pvs0Program,
    trs: &Trs,
    encoding: &NaturalEncoding,
    pairs: &[(usize, DepPairAlt)],
    samples: &[Value],
    fuel: usize,
) -> Result<CcDpReport, Pvs0Error> {
    encoding.check(trs, program.width)?;
    for v in samples {
        program.check_value("sample", v)?;
    }
    let contexts = calling_contexts(program);
    let mut reports = Vec::with_capacity(pairs.len());
    for (context_index, pair) in pairs {
        let context = contexts.get(*context_index).ok_or_else(|| {
            Pvs0Error::Encoding(format!(
                "no calling context {context_index} (program has {})",
                contexts.len()
            ))
        })?;
        let rule = trs
            .rule(pair.rule_index)
            .ok_or_else(|| Pvs0Error::Encoding(format!("no rule {}", pair.rule_index)))?;
        let rhs_sub = rule
            .rhs()
            .get(&pair.position)
            .ok_or_else(|| Pvs0Error::Encoding(format!("{pair} is not a position of the rhs")))?;
        let mut report = PairReport {
            context: *context_index,
            rule: pair.rule_index,
            position: pair.position.to_string(),
            applicable: 0,
            actuals_compared: 0,
            mismatches: Vec::new(),
            pass: true,
        };
        for v in samples {
            let mut holds = true;
            let mut undefined = false;
            for (guard, polarity) in &context.condition {
                match chi_eval(program, guard, v, fuel) {
                    Some(g) => holds &= (g != program.false_val) == *polarity,
                    None => undefined = true,
                }
            }
            if undefined {
                report.mismatches.push(Mismatch {
                    sample: v.clone(),
                    kind: MismatchKind::GuardUndefined,
                    detail: format!("a guard has no value within fuel {fuel}"),
                });
                continue;
            }
            let encoded = encoding.encode(v);
            let sigma = match_term(rule.lhs(), &encoded);
            if holds != sigma.is_some() {
                report.mismatches.push(Mismatch {
                    sample: v.clone(),
                    kind: MismatchKind::Condition,
                    detail: format!(
                        "condition {} but {} {} {encoded}",
                        if holds { "holds" } else { "fails" },
                        rule.lhs(),
                        if sigma.is_some() { "matches" } else { "does not match" }
                    ),
                });
                continue;
            }
            let Some(sigma) = sigma else { continue };
            report.applicable += 1;
            let Some(next) = chi_eval(program, &context.actual, v, fuel) else {
                continue;
            };
            let Ok(normal) = trs.normalize(&sigma.apply(rhs_sub), RelationMode::NonRootInnermost, fuel) else {
                continue;
            };
            report.actuals_compared += 1;
            let expected = encoding.encode(&next);
            if *normal.end() != expected {
                report.mismatches.push(Mismatch {
                    sample: v.clone(),
                    kind: MismatchKind::Actual,
                    detail: format!(
                        "actual parameter {next} encodes to {expected}, the pair gives {}",
                        normal.end()
                    ),
                });
            }
        }
        report.pass = report.mismatches.is_empty();
        reports.push(report);
    }
    Ok(CcDpReport {
        samples: samples.len(),
        pass: reports.iter().all(|r| r.pass),
        pairs: reports,
    })
}
