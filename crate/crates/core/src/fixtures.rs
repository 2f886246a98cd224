//! Small systems and programs used in tests, examples and the shipped fixture files.

use crate::pvs0::{Guard, OperatorDef, Pvs0Expr, Pvs0Program, Value};
use crate::rewriting::Trs;
use crate::term::Term;

fn x() -> Term {
    Term::var("x")
}

fn y() -> Term {
    Term::var("y")
}

fn zero() -> Term {
    Term::constant("0")
}

fn s(t: Term) -> Term {
    Term::apply("s", vec![t])
}

fn a(l: Term, r: Term) -> Term {
    Term::apply("a", vec![l, r])
}

/// Ackermann's function:
/// `a(0,y) → s(y)`, `a(s(x),0) → a(x,s(0))`, `a(s(x),s(y)) → a(x,a(s(x),y))`.
pub fn ackermann_trs() -> Trs {
    Trs::new(vec![
        (a(zero(), y()), s(y())),
        (a(s(x()), zero()), a(x(), s(zero()))),
        (a(s(x()), s(y())), a(x(), a(s(x()), y()))),
    ])
    .expect("valid rules")
}

/// `f(x) → f(x)`.
pub fn loop_trs() -> Trs {
    let f = |t: Term| Term::apply("f", vec![t]);
    Trs::new(vec![(f(x()), f(x()))]).expect("valid rules")
}

/// `h(x,y) → h(g(x,y), g(g(x,y),y))`, `h(x,y) → g(x,y)`, `g(x,y) → y`.
pub fn hg_trs() -> Trs {
    let g = |l: Term, r: Term| Term::apply("g", vec![l, r]);
    let h = |l: Term, r: Term| Term::apply("h", vec![l, r]);
    Trs::new(vec![
        (h(x(), y()), h(g(x(), y()), g(g(x(), y()), y()))),
        (h(x(), y()), g(x(), y())),
        (g(x(), y()), y()),
    ])
    .expect("valid rules")
}

/// `g(x) → g(s(x))`: nonterminating without ever repeating a term.
pub fn grow_trs() -> Trs {
    let g = |t: Term| Term::apply("g", vec![t]);
    Trs::new(vec![(g(x()), g(s(x())))]).expect("valid rules")
}

/// Ackermann's function in PVS0 over pairs `(m, n)`, with `⊥ = (0,0)` and `⊤ = (1,0)`.
///
/// ```text
/// O1(0)((m,n)) := IF m = 0 THEN ⊤ ELSE ⊥
/// O1(1)((m,n)) := IF n = 0 THEN ⊤ ELSE ⊥
/// O1(2)((m,n)) := (n+1, 0)
/// O1(3)((m,n)) := IF m > 0 THEN (m-1, 1) ELSE ⊥
/// O1(4)((m,n)) := IF n > 0 THEN (m, n-1) ELSE ⊥
/// O2(0)((m,n),(i,j)) := IF m > 0 THEN (m-1, i) ELSE ⊥
///
/// ite(op1(0,vr), op1(2,vr),
///     ite(op1(1,vr), rec(op1(3,vr)),
///         rec(op2(0, vr, rec(op1(4,vr))))))
/// ```
pub fn ackermann_program() -> Pvs0Program {
    let m = || Guard::comp(0, 0);
    let n = || Guard::comp(0, 1);
    let i = Guard::comp(1, 0);
    let one = || Guard::Nat(1);
    let zero = || Guard::Nat(0);
    let o1 = vec![
        OperatorDef::unary(Guard::ite(Guard::eq(m(), zero()), Guard::Top, Guard::Bottom)),
        OperatorDef::unary(Guard::ite(Guard::eq(n(), zero()), Guard::Top, Guard::Bottom)),
        OperatorDef::unary(Guard::Tuple(vec![Guard::add(n(), one()), zero()])),
        OperatorDef::unary(Guard::ite(
            Guard::lt(zero(), m()),
            Guard::Tuple(vec![Guard::monus(m(), one()), one()]),
            Guard::Bottom,
        )),
        OperatorDef::unary(Guard::ite(
            Guard::lt(zero(), n()),
            Guard::Tuple(vec![m(), Guard::monus(n(), one())]),
            Guard::Bottom,
        )),
    ];
    let o2 = vec![OperatorDef::binary(Guard::ite(
        Guard::lt(zero(), m()),
        Guard::Tuple(vec![Guard::monus(m(), one()), i]),
        Guard::Bottom,
    ))];
    let vr = || Pvs0Expr::Vr;
    let body = Pvs0Expr::ite(
        Pvs0Expr::op1(0, vr()),
        Pvs0Expr::op1(2, vr()),
        Pvs0Expr::ite(
            Pvs0Expr::op1(1, vr()),
            Pvs0Expr::rec(Pvs0Expr::op1(3, vr())),
            Pvs0Expr::rec(Pvs0Expr::op2(0, vr(), Pvs0Expr::rec(Pvs0Expr::op1(4, vr())))),
        ),
    );
    Pvs0Program::new(2, Value::from((0, 0)), Value::from((1, 0)), o1, o2, body).expect("valid program")
}

/// A rule cycle `f0 → f1 → … → f{k-1} → f0` over symbols of one arity, plus the
/// identity-like `h(x) → x`.
///
/// `steps[i][j] = (p, wrap)` makes argument `j` of the rhs of rule `i` the variable
/// `x{p}`, wrapped in `h` when `wrap`. Every ground start term `f0(…)` whose arguments
/// normalize has an innermost loop, since only finitely many argument tuples occur.
pub fn cyclic_trs(arity: usize, steps: &[Vec<(usize, bool)>]) -> Trs {
    let k = steps.len();
    let xs: Vec<Term> = (0..arity).map(|p| Term::var(&format!("x{p}"))).collect();
    let mut rules = Vec::with_capacity(k + 1);
    for (i, step) in steps.iter().enumerate() {
        assert_eq!(step.len(), arity, "one entry per argument");
        let args = step
            .iter()
            .map(|&(p, wrap)| {
                let x = xs[p].clone();
                if wrap {
                    Term::apply("h", vec![x])
                } else {
                    x
                }
            })
            .collect();
        rules.push((
            Term::apply(&format!("f{i}"), xs.clone()),
            Term::apply(&format!("f{}", (i + 1) % k), args),
        ));
    }
    rules.push((Term::apply("h", vec![x()]), x()));
    Trs::new(rules).expect("valid rules")
}
