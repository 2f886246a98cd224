//! Text formats: TPDB-style rewrite systems, terms, and JSON for chain witnesses and
//! derivation traces.
//!
//! ```text
//! (VAR x y)
//! (RULES
//!   a(0,y) -> s(y)
//!   a(s(x),0) -> a(x,s(0))
//! )
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::{is_dep_pair_alt, ChainEntry, ChainWitness, DepPairAlt};
use crate::rewriting::{DerivationTrace, RelationMode, RuleError, Step, Trs};
use crate::subst::{Substitution, FRESH_SEPARATOR};
use crate::term::{Position, Signature, Symbol, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: rule restriction violated: {source}")]
    RuleRestriction { line: usize, source: RuleError },
    #[error("invalid dependency pair in entry {index}: {reason}")]
    InvalidDepPair { index: usize, reason: String },
    #[error("{0}")]
    Json(String),
}

fn parse_error(line: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Comma,
    Arrow,
    Ident(String),
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Open => write!(f, "'('"),
            Token::Close => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::Arrow => write!(f, "'->'"),
            Token::Ident(s) => write!(f, "'{s}'"),
        }
    }
}

fn tokenize(text: &str) -> Vec<(usize, Token)> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            match c {
                c if c.is_whitespace() => {
                    chars.next();
                }
                '(' | ')' | ',' => {
                    chars.next();
                    out.push((
                        line_no,
                        match c {
                            '(' => Token::Open,
                            ')' => Token::Close,
                            _ => Token::Comma,
                        },
                    ));
                }
                _ if line[i..].starts_with("->") => {
                    chars.next();
                    chars.next();
                    out.push((line_no, Token::Arrow));
                }
                _ => {
                    let mut end = i;
                    while let Some(&(j, d)) = chars.peek() {
                        if d.is_whitespace() || "(),".contains(d) || line[j..].starts_with("->") {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    out.push((line_no, Token::Ident(line[i..end].to_string())));
                }
            }
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    vars: &'a BTreeSet<Variable>,
    /// Arity constraints: known symbols must be used with these arities.
    signature: Option<&'a Signature>,
}

impl<'a> Parser<'a> {
    fn line(&self) -> usize {
        self.tokens.get(self.pos).or(self.tokens.last()).map_or(1, |(l, _)| *l)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Result<Token, SyntaxError> {
        let token = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| parse_error(self.line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(token)
    }

    fn expect(&mut self, want: Token) -> Result<(), SyntaxError> {
        let line = self.line();
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(parse_error(line, format!("expected {want}, found {got}")))
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let line = self.line();
        let name = match self.next()? {
            Token::Ident(name) => name,
            other => return Err(parse_error(line, format!("expected a term, found {other}"))),
        };
        let is_var = self.vars.contains(&Variable::new(&name));
        if self.peek() != Some(&Token::Open) {
            if is_var {
                return Ok(Term::var(&name));
            }
            return self.application(line, &name, Vec::new());
        }
        if is_var {
            return Err(parse_error(line, format!("variable {name} applied to arguments")));
        }
        self.next()?;
        let mut args = Vec::new();
        if self.peek() == Some(&Token::Close) {
            self.next()?;
            return self.application(line, &name, args);
        }
        loop {
            args.push(self.term()?);
            let line = self.line();
            match self.next()? {
                Token::Comma => continue,
                Token::Close => break,
                other => return Err(parse_error(line, format!("expected ',' or ')', found {other}"))),
            }
        }
        self.application(line, &name, args)
    }

    fn application(&self, line: usize, name: &str, args: Vec<Term>) -> Result<Term, SyntaxError> {
        if name.contains(FRESH_SEPARATOR) {
            return Err(parse_error(line, format!("'{FRESH_SEPARATOR}' is reserved: {name}")));
        }
        if let Some(known) = self.signature.and_then(|s| s.get(name)) {
            if known.arity() != args.len() {
                return Err(parse_error(
                    line,
                    format!(
                        "{name} has arity {}, applied to {} arguments",
                        known.arity(),
                        args.len()
                    ),
                ));
            }
        }
        Ok(Term::App(Symbol::new(name, args.len()), args.into()))
    }
}

/// Parses a rewrite system. Identifiers declared in `(VAR …)` are variables; everything
/// else is a function symbol, with arity fixed by its first use.
pub fn parse_trs(text: &str) -> Result<Trs, SyntaxError> {
    let tokens = tokenize(text);
    let mut vars = BTreeSet::new();
    let mut rules: Vec<(usize, Term, Term)> = Vec::new();
    let mut i = 0;
    let mut saw_rules = false;
    while i < tokens.len() {
        let (line, token) = &tokens[i];
        if *token != Token::Open {
            return Err(parse_error(
                *line,
                format!("expected '(' to open a section, found {token}"),
            ));
        }
        let section = match tokens.get(i + 1) {
            Some((_, Token::Ident(name))) => name.clone(),
            _ => return Err(parse_error(*line, "expected a section name")),
        };
        i += 2;
        match section.as_str() {
            "VAR" => {
                while let Some((line, token)) = tokens.get(i) {
                    i += 1;
                    match token {
                        Token::Close => break,
                        Token::Ident(name) if name.contains(FRESH_SEPARATOR) => {
                            return Err(parse_error(*line, format!("'{FRESH_SEPARATOR}' is reserved: {name}")))
                        }
                        Token::Ident(name) => {
                            vars.insert(Variable::new(name));
                        }
                        other => return Err(parse_error(*line, format!("unexpected {other} in VAR"))),
                    }
                }
            }
            "RULES" => {
                saw_rules = true;
                let mut parser = Parser {
                    tokens: tokens[i..].to_vec(),
                    pos: 0,
                    vars: &vars,
                    signature: None,
                };
                loop {
                    match parser.peek() {
                        Some(Token::Close) => {
                            parser.next()?;
                            break;
                        }
                        None => return Err(parse_error(parser.line(), "unterminated RULES section")),
                        _ => {}
                    }
                    let line = parser.line();
                    let lhs = parser.term()?;
                    parser.expect(Token::Arrow)?;
                    let rhs = parser.term()?;
                    rules.push((line, lhs, rhs));
                }
                i += parser.pos;
            }
            _ => {
                // Other sections (COMMENT, STRATEGY, …) are skipped with balanced parentheses.
                let mut depth = 1;
                while depth > 0 {
                    let Some((_, token)) = tokens.get(i) else {
                        return Err(parse_error(*line, format!("unterminated {section} section")));
                    };
                    match token {
                        Token::Open => depth += 1,
                        Token::Close => depth -= 1,
                        _ => {}
                    }
                    i += 1;
                }
            }
        }
    }
    if !saw_rules {
        return Err(parse_error(1, "no RULES section"));
    }
    let lines: Vec<usize> = rules.iter().map(|(l, _, _)| *l).collect();
    let trs = Trs::new(rules.into_iter().map(|(_, l, r)| (l, r)).collect()).map_err(|source| {
        let index = match &source {
            RuleError::LhsIsVariable { index, .. }
            | RuleError::FreshRhsVariable { index, .. }
            | RuleError::Signature { index, .. }
            | RuleError::Malformed { index } => *index,
        };
        SyntaxError::RuleRestriction {
            line: lines[index],
            source,
        }
    })?;
    for var in &vars {
        if trs.signature().contains(var.name()) {
            return Err(parse_error(
                1,
                format!("{var} is both a variable and a function symbol"),
            ));
        }
    }
    Ok(trs.with_variables(vars))
}

/// Prints a system in the format read by [`parse_trs`].
pub fn print_trs(trs: &Trs) -> String {
    let mut out = String::new();
    if !trs.variables().is_empty() {
        let names: Vec<&str> = trs.variables().iter().map(|v| v.name()).collect();
        writeln!(out, "(VAR {})", names.join(" ")).unwrap();
    }
    writeln!(out, "(RULES").unwrap();
    for rule in trs.rules() {
        writeln!(out, "  {rule}").unwrap();
    }
    writeln!(out, ")").unwrap();
    out
}

/// Parses a term over `trs`: its variables are variables, its symbols must be used with
/// their arities, and unknown identifiers become fresh constructors.
pub fn parse_term(trs: &Trs, text: &str) -> Result<Term, SyntaxError> {
    parse_term_with(text, trs.variables(), Some(trs.signature()))
}

/// Parses a term with the given variable names and optional arity constraints.
pub fn parse_term_with(
    text: &str,
    vars: &BTreeSet<Variable>,
    signature: Option<&Signature>,
) -> Result<Term, SyntaxError> {
    let mut parser = Parser {
        tokens: tokenize(text),
        pos: 0,
        vars,
        signature,
    };
    let term = parser.term()?;
    if let Some(token) = parser.peek() {
        return Err(parse_error(parser.line(), format!("trailing input at {token}")));
    }
    if !term.is_well_formed() {
        return Err(parse_error(1, format!("{term} uses a symbol with two arities")));
    }
    Ok(term)
}

fn parse_substitution(trs: &Trs, map: &BTreeMap<String, String>) -> Result<Substitution, SyntaxError> {
    let mut vars = trs.variables().clone();
    vars.extend(map.keys().map(|k| Variable::new(k)));
    let mut sigma = Substitution::new();
    for (var, text) in map {
        if var.is_empty() {
            return Err(SyntaxError::Json("empty variable name".into()));
        }
        if trs.signature().contains(var) {
            return Err(SyntaxError::Json(format!("{var} is a function symbol")));
        }
        let term = parse_term_with(text, &vars, Some(trs.signature()))?;
        sigma.bind(Variable::new(var), term);
    }
    Ok(sigma)
}

fn print_substitution(sigma: &Substitution) -> BTreeMap<String, String> {
    sigma
        .iter()
        .map(|(v, t)| (v.name().to_string(), t.to_string()))
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessFile {
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    rule: usize,
    position: String,
    #[serde(default)]
    substitution: BTreeMap<String, String>,
}

/// Parses a chain witness for `trs`, checking that every entry names a dependency pair.
pub fn parse_chain_witness(trs: &Trs, text: &str) -> Result<ChainWitness, SyntaxError> {
    let file: WitnessFile = serde_json::from_str(text).map_err(|e| SyntaxError::Json(e.to_string()))?;
    let mut entries = Vec::with_capacity(file.entries.len());
    for (index, entry) in file.entries.into_iter().enumerate() {
        let position: Position = entry.position.parse().map_err(|e| SyntaxError::InvalidDepPair {
            index,
            reason: format!("{e}"),
        })?;
        let pair = DepPairAlt::new(entry.rule, position);
        if !is_dep_pair_alt(trs, &pair) {
            return Err(SyntaxError::InvalidDepPair {
                index,
                reason: match trs.rule(entry.rule) {
                    None => format!("no rule {} in a system of {} rules", entry.rule, trs.rules().len()),
                    Some(rule) => format!(
                        "position {} of {} is not a defined-rooted subterm",
                        pair.position,
                        rule.rhs()
                    ),
                },
            });
        }
        let substitution = parse_substitution(trs, &entry.substitution)?;
        entries.push(ChainEntry::new(pair, substitution));
    }
    Ok(ChainWitness::new(entries))
}

pub fn print_chain_witness(witness: &ChainWitness) -> String {
    let file = WitnessFile {
        entries: witness
            .entries
            .iter()
            .map(|e| EntryFile {
                rule: e.pair.rule_index,
                position: e.pair.position.to_string(),
                substitution: print_substitution(&e.substitution),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("witnesses serialize")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    start: String,
    mode: RelationMode,
    steps: Vec<StepFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepFile {
    position: String,
    rule_index: usize,
    substitution: BTreeMap<String, String>,
    term: String,
}

/// JSON form of a trace.
pub fn trace_to_json(trace: &DerivationTrace) -> serde_json::Value {
    serde_json::to_value(TraceFile {
        start: trace.start.to_string(),
        mode: trace.mode,
        steps: trace
            .steps
            .iter()
            .map(|s| StepFile {
                position: s.position.to_string(),
                rule_index: s.rule_index,
                substitution: print_substitution(&s.substitution),
                term: s.result.to_string(),
            })
            .collect(),
    })
    .expect("traces serialize")
}

pub fn print_trace(trace: &DerivationTrace) -> String {
    serde_json::to_string_pretty(&trace_to_json(trace)).expect("traces serialize")
}

/// Parses a trace over `trs`. The trace is not replayed.
pub fn parse_trace(trs: &Trs, text: &str) -> Result<DerivationTrace, SyntaxError> {
    let file: TraceFile = serde_json::from_str(text).map_err(|e| SyntaxError::Json(e.to_string()))?;
    let mut vars = trs.variables().clone();
    for step in &file.steps {
        vars.extend(step.substitution.keys().map(|k| Variable::new(k)));
    }
    let term = |text: &str| parse_term_with(text, &vars, Some(trs.signature()));
    let steps = file
        .steps
        .iter()
        .map(|s| {
            Ok(Step {
                position: s.position.parse().map_err(|e| SyntaxError::Json(format!("{e}")))?,
                rule_index: s.rule_index,
                substitution: parse_substitution(trs, &s.substitution)?,
                result: term(&s.term)?,
            })
        })
        .collect::<Result<_, SyntaxError>>()?;
    Ok(DerivationTrace {
        start: term(&file.start)?,
        steps,
        mode: file.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ackermann_trs, hg_trs};

    const ACKERMANN: &str =
        "(VAR x y)\n(RULES\n  a(0,y) -> s(y)\n  a(s(x),0) -> a(x,s(0))\n  a(s(x),s(y)) -> a(x,a(s(x),y))\n)\n";

    #[test]
    fn ackermann_file() {
        let trs = parse_trs(ACKERMANN).unwrap();
        assert_eq!(trs.rules().len(), 3);
        let defined: Vec<_> = trs
            .defined_symbols()
            .into_iter()
            .map(|s| s.name().to_string())
            .collect();
        assert_eq!(defined, ["a"]);
        assert_eq!(trs.rules(), ackermann_trs().rules());
    }

    #[test]
    fn rule_restrictions() {
        let err = parse_trs("(VAR x)\n(RULES\n  x -> s(x)\n)").unwrap_err();
        assert!(matches!(
            err,
            SyntaxError::RuleRestriction {
                line: 3,
                source: RuleError::LhsIsVariable { .. }
            }
        ));
        let err = parse_trs("(VAR x y)\n(RULES\n  f(x) -> g(y)\n)").unwrap_err();
        assert!(matches!(
            err,
            SyntaxError::RuleRestriction {
                source: RuleError::FreshRhsVariable { .. },
                ..
            }
        ));
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(
            parse_trs("(RULES\n f(x -> x\n)"),
            Err(SyntaxError::Parse { line: 2, .. })
        ));
        assert!(parse_trs("(VAR x#1)(RULES f(x#1) -> x#1)").is_err());
        assert!(parse_trs("(VAR f)(RULES f(a) -> a)").is_err());
        assert!(parse_trs("(RULES f(a) -> f(a,a))").is_err());
        assert!(parse_trs("(VAR x)").is_err());
    }

    #[test]
    fn comments_and_strategy_are_skipped() {
        let trs = parse_trs("(COMMENT loops (forever))\n(STRATEGY INNERMOST)\n(VAR x)\n(RULES f(x) -> f(x))").unwrap();
        assert_eq!(trs.rules().len(), 1);
    }

    #[test]
    fn trs_round_trip() {
        for trs in [ackermann_trs(), hg_trs()] {
            assert_eq!(parse_trs(&print_trs(&trs)).unwrap(), trs);
        }
    }

    #[test]
    fn terms() {
        let trs = ackermann_trs();
        let t = parse_term(&trs, "a(s(x), 0)").unwrap();
        assert_eq!(t.to_string(), "a(s(x),0)");
        assert!(parse_term(&trs, "a(0)").is_err());
        assert!(parse_term(&trs, "a(0,0) 0").is_err());
        assert_eq!(parse_term(&trs, "c").unwrap(), Term::constant("c"));
    }

    #[test]
    fn witnesses() {
        let trs = ackermann_trs();
        let text = r#"{"entries":[{"rule":2,"position":"2","substitution":{"x":"0","y":"s(0)"}},
                                  {"rule":2,"position":"2","substitution":{"x":"0","y":"0"}}]}"#;
        let w = parse_chain_witness(&trs, text).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(parse_chain_witness(&trs, &print_chain_witness(&w)).unwrap(), w);
        let bad = r#"{"entries":[{"rule":7,"position":"","substitution":{}}]}"#;
        assert!(matches!(
            parse_chain_witness(&trs, bad),
            Err(SyntaxError::InvalidDepPair { index: 0, .. })
        ));
        let bad =
            r#"{"entries":[{"rule":2,"position":"","substitution":{}},{"rule":0,"position":"","substitution":{}}]}"#;
        assert!(matches!(
            parse_chain_witness(&trs, bad),
            Err(SyntaxError::InvalidDepPair { index: 1, .. })
        ));
        assert!(parse_chain_witness(&trs, r#"{"entries":[]}"#).unwrap().is_empty());
        assert!(matches!(parse_chain_witness(&trs, "{"), Err(SyntaxError::Json(_))));
    }

    #[test]
    fn traces() {
        let trs = ackermann_trs();
        let t = parse_term(&trs, "a(s(0),s(0))").unwrap();
        let trace = trs.normalize(&t, RelationMode::Innermost, 100).unwrap();
        let back = parse_trace(&trs, &print_trace(&trace)).unwrap();
        assert_eq!(back, trace);
        assert_eq!(
            back.replay(&trs).unwrap(),
            Term::apply(
                "s",
                vec![Term::apply("s", vec![Term::apply("s", vec![Term::constant("0")])])]
            )
        );
    }
}
