//! Command dispatch for the `rdp` binary.
//!
//! Every command produces one JSON report. With `--json` the report is printed as is;
//! otherwise it is rendered as `key: value` lines carrying the same content.
//!
//! Exit codes: 0 when the result is verified or the command succeeded, 1 when nothing was
//! found within the fuel budget or a check did not pass, 2 on input errors.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value as Json};

use rdp_core::dp::{
    chain_from_loop, dep_pairs_alt, derivation_from_chain, detect_innermost_loop, find_mint_subterm,
    rename_apart_witness, standard_dep_pairs, verify_chain_prefix, verify_renamed_chain, ChainFailure, LinkFailure,
    LoopCertificate,
};
use rdp_core::pvs0::{
    calling_contexts, check_cc_dp_correspondence, chi_eval, epsilon_check, terminates_on, EpsilonVerdict,
    NaturalEncoding, Pvs0Program, TerminationProbe, Value,
};
use rdp_core::rewriting::{Reach, RelationMode};
use rdp_core::syntax::{parse_chain_witness, parse_term, parse_trs, print_chain_witness, trace_to_json};
use rdp_core::{DerivationTrace, Position, Trs, DEFAULT_FUEL};

/// Environment variable overriding the default fuel.
pub const FUEL_ENV: &str = "RDP_FUEL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_FOUND: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rdp",
    version,
    about = "Innermost dependency pairs, chains and loops for term rewriting systems"
)]
struct Cli {
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Search budget (steps for normalization, distinct terms for searches, recursion
    /// depth for PVS0). Defaults to $RDP_FUEL or 10000.
    #[arg(long, global = true)]
    fuel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List dependency pairs as (rule, position) and as term pairs.
    Dps {
        trs: PathBuf,
        /// Drop standard pairs equal up to variable renaming.
        #[arg(long)]
        dedup: bool,
    },
    /// Normalize a term with the leftmost-lowest strategy.
    Normalize {
        trs: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, default_value = "innermost")]
        mode: RelationMode,
    },
    /// Search for a derivation between two terms.
    Reach {
        trs: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value = "full")]
        mode: RelationMode,
    },
    /// Search for an exact innermost cycle reachable from a term.
    Loop {
        trs: PathBuf,
        #[arg(long)]
        term: String,
    },
    /// Find a minimal looping subterm.
    Mint {
        trs: PathBuf,
        #[arg(long)]
        term: String,
    },
    /// Verify that a witness is a chain prefix.
    ChainVerify {
        trs: PathBuf,
        witness: PathBuf,
        /// Check innermost chains (non-root innermost links, nr-normal instantiated lhs).
        #[arg(long)]
        innermost: bool,
        /// Rename the entries apart and use one merged substitution.
        #[arg(long)]
        rename_apart: bool,
    },
    /// Build the innermost derivation induced by an innermost chain prefix.
    ChainDerive { trs: PathBuf, witness: PathBuf },
    /// Build an innermost chain prefix from a loop found from a term.
    LoopChain {
        trs: PathBuf,
        #[arg(long)]
        term: String,
        #[arg(long, default_value_t = 5)]
        length: usize,
    },
    /// Evaluate a PVS0 program on an input, optionally checking the output.
    Pvs0Eval {
        program: PathBuf,
        /// Input tuple, e.g. "2,3".
        #[arg(long)]
        input: String,
        /// Expected output tuple.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Least fuel for which a PVS0 program evaluates on an input.
    Pvs0Terminates {
        program: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// List the calling contexts of a PVS0 program.
    Pvs0Contexts { program: PathBuf },
    /// Compare calling contexts with dependency pairs on sample inputs.
    CcDpCheck {
        program: PathBuf,
        trs: PathBuf,
        /// CONTEXT:RULE:POSITION with 0-based context and rule indices, e.g. "0:1:ε".
        #[arg(long = "pair", required = true)]
        pairs: Vec<String>,
        /// Samples separated by ';', e.g. "1,0;0,3". Defaults to the grid 0..=3 per component.
        #[arg(long)]
        samples: Option<String>,
        #[arg(long, default_value = "a")]
        encode: String,
        #[arg(long, default_value = "s")]
        succ: String,
        #[arg(long, default_value = "0")]
        zero: String,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

struct Report {
    code: i32,
    body: Json,
}

fn input_error(message: impl std::fmt::Display) -> Report {
    Report {
        code: EXIT_INPUT,
        body: json!({"status": "input-error", "detail": message.to_string()}),
    }
}

/// Runs one command. `args` excludes the program name. `env_fuel` is the value of
/// [`FUEL_ENV`], if set.
pub fn run(args: &[String], env_fuel: Option<&str>) -> Outcome {
    let argv: Vec<String> = std::iter::once("rdp".to_string()).chain(args.iter().cloned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            return Outcome {
                code,
                output: e.render().to_string(),
            };
        }
    };
    let fuel = match (cli.fuel, env_fuel) {
        (Some(f), _) => f,
        (None, Some(text)) => match text.trim().parse() {
            Ok(f) => f,
            Err(_) => {
                return render(
                    input_error(format!("{FUEL_ENV}={text} is not a natural number")),
                    cli.json,
                );
            }
        },
        (None, None) => DEFAULT_FUEL,
    };
    let json = cli.json;
    // Terms and PVS0 evaluations can nest deeply; run on a thread with a large stack.
    let report = std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(move || dispatch(cli.command, fuel).unwrap_or_else(|e| e))
        .expect("spawn worker")
        .join()
        .unwrap_or_else(|_| input_error("internal error"));
    render(report, json)
}

fn render(report: Report, json: bool) -> Outcome {
    let output = if json {
        serde_json::to_string_pretty(&report.body).expect("reports serialize")
    } else {
        text(&report.body)
    };
    Outcome {
        code: report.code,
        output,
    }
}

/// `key: value` lines; nested values are written as compact JSON.
fn text(body: &Json) -> String {
    match body {
        Json::Object(map) => map
            .iter()
            .map(|(k, v)| match v {
                Json::String(s) => format!("{k}: {s}"),
                Json::Array(items) if items.iter().all(|i| i.is_string()) => {
                    let lines: Vec<String> = items.iter().map(|i| format!("  {}", i.as_str().unwrap())).collect();
                    format!("{k}:\n{}", lines.join("\n"))
                }
                Json::Array(items) => {
                    let lines: Vec<String> = items.iter().map(|i| format!("  {i}")).collect();
                    format!("{k}:\n{}", lines.join("\n"))
                }
                other => format!("{k}: {other}"),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        other => other.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Report> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_trs(path: &Path) -> Result<Trs, Report> {
    parse_trs(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Pvs0Program, Report> {
    Pvs0Program::from_json(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn term(trs: &Trs, text: &str) -> Result<rdp_core::Term, Report> {
    parse_term(trs, text).map_err(|e| input_error(format!("term {text:?}: {e}")))
}

fn tuple(program: &Pvs0Program, text: &str) -> Result<Value, Report> {
    let components = text
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(|c| c.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| input_error(format!("tuple {text:?}: {e}")))?;
    let v = Value::new(components);
    program.check_value("input", &v).map_err(input_error)?;
    Ok(v)
}

fn certificate_json(cert: &LoopCertificate) -> Json {
    json!({
        "term": cert.start().to_string(),
        "stem": trace_to_json(&cert.stem),
        "cycle": trace_to_json(&cert.cycle),
    })
}

fn not_found(detail: impl Into<String>, fuel: usize) -> Report {
    Report {
        code: EXIT_NOT_FOUND,
        body: json!({"status": "not-found", "detail": detail.into(), "fuel": fuel}),
    }
}

fn chain_failure(f: &ChainFailure, fuel: usize) -> Report {
    let status = if matches!(f.reason, LinkFailure::NotFound { .. }) {
        "not-found"
    } else {
        "failure"
    };
    Report {
        code: EXIT_NOT_FOUND,
        body: json!({"status": status, "detail": f.to_string(), "link": f.index, "fuel": fuel}),
    }
}

fn traces_json(traces: &[DerivationTrace]) -> Json {
    Json::Array(traces.iter().map(trace_to_json).collect())
}

fn dispatch(command: Command, fuel: usize) -> Result<Report, Report> {
    let ok = |body: Json| Ok(Report { code: EXIT_OK, body });
    match command {
        Command::Dps { trs, dedup } => {
            let trs = load_trs(&trs)?;
            let alt: Vec<String> = dep_pairs_alt(&trs).iter().map(|d| d.to_string()).collect();
            let standard: Vec<String> = standard_dep_pairs(&trs, dedup).iter().map(|p| p.to_string()).collect();
            ok(json!({
                "status": "success",
                "count": standard.len(),
                "alt": alt,
                "standard": standard,
            }))
        }
        Command::Normalize { trs, term: t, mode } => {
            let trs = load_trs(&trs)?;
            let t = term(&trs, &t)?;
            match trs.normalize(&t, mode, fuel) {
                Ok(trace) => ok(json!({
                    "status": "verified",
                    "normal_form": trace.end().to_string(),
                    "steps": trace.len(),
                    "fuel": fuel,
                    "trace": trace_to_json(&trace),
                })),
                Err(e) => Ok(Report {
                    code: EXIT_NOT_FOUND,
                    body: json!({
                        "status": "unknown",
                        "detail": format!("no {mode} normal form within {} steps", e.fuel),
                        "fuel": e.fuel,
                        "last_size": e.partial.end().size(),
                    }),
                }),
            }
        }
        Command::Reach { trs, from, to, mode } => {
            let trs = load_trs(&trs)?;
            let (from, to) = (term(&trs, &from)?, term(&trs, &to)?);
            match trs.derives(&from, &to, mode, fuel) {
                Reach::Verified(trace) => ok(json!({
                    "status": "verified",
                    "steps": trace.len(),
                    "fuel": fuel,
                    "traces": [trace_to_json(&trace)],
                })),
                Reach::NotFound {
                    fuel,
                    explored,
                    exhaustive,
                } => Ok(Report {
                    code: EXIT_NOT_FOUND,
                    body: json!({
                        "status": "not-found",
                        "detail": if exhaustive {
                            format!("{to} is not among the {explored} terms reachable from {from}")
                        } else {
                            format!("{to} not reached within {explored} explored terms")
                        },
                        "explored": explored,
                        "exhaustive": exhaustive,
                        "fuel": fuel,
                    }),
                }),
            }
        }
        Command::Loop { trs, term: t } => {
            let trs = load_trs(&trs)?;
            let t = term(&trs, &t)?;
            match detect_innermost_loop(&trs, &t, fuel) {
                Some(cert) => ok(json!({"status": "verified", "fuel": fuel, "certificate": certificate_json(&cert)})),
                None => Err(not_found(
                    format!("no innermost cycle found from {t}; this is not a termination claim"),
                    fuel,
                )),
            }
        }
        Command::Mint { trs, term: t } => {
            let trs = load_trs(&trs)?;
            let t = term(&trs, &t)?;
            match find_mint_subterm(&trs, &t, fuel) {
                Some((position, cert)) => ok(json!({
                    "status": "verified",
                    "position": position.to_string(),
                    "subterm": t.get(&position).expect("found position").to_string(),
                    "fuel": fuel,
                    "certificate": certificate_json(&cert),
                })),
                None => Err(not_found(format!("no subterm of {t} shows an innermost cycle"), fuel)),
            }
        }
        Command::ChainVerify {
            trs,
            witness,
            innermost,
            rename_apart,
        } => {
            let trs = load_trs(&trs)?;
            let w = parse_chain_witness(&trs, &read(&witness)?).map_err(input_error)?;
            let result = if rename_apart {
                let renamed = rename_apart_witness(&trs, &w).map_err(input_error)?;
                verify_renamed_chain(&trs, &renamed, innermost, fuel)
            } else {
                verify_chain_prefix(&trs, &w, innermost, fuel)
            };
            match result {
                Ok(traces) => ok(json!({
                    "status": "verified",
                    "detail": format!("{} entries, {} links", w.len(), traces.len()),
                    "fuel": fuel,
                    "traces": traces_json(&traces),
                })),
                Err(f) => Err(chain_failure(&f, fuel)),
            }
        }
        Command::ChainDerive { trs, witness } => {
            let trs = load_trs(&trs)?;
            let w = parse_chain_witness(&trs, &read(&witness)?).map_err(input_error)?;
            match derivation_from_chain(&trs, &w, fuel) {
                Ok(d) => ok(json!({
                    "status": "verified",
                    "terms": d.contexts.iter().map(|(t, _)| t.to_string()).collect::<Vec<_>>(),
                    "positions": d.contexts.iter().map(|(_, p)| p.to_string()).collect::<Vec<_>>(),
                    "fuel": fuel,
                    "traces": traces_json(&d.links),
                })),
                Err(e) => Err(Report {
                    code: EXIT_NOT_FOUND,
                    body: json!({"status": "failure", "detail": e.to_string(), "fuel": fuel}),
                }),
            }
        }
        Command::LoopChain { trs, term: t, length } => {
            let trs = load_trs(&trs)?;
            let t = term(&trs, &t)?;
            if length == 0 {
                return Err(input_error("--length must be at least 1"));
            }
            let cert = detect_innermost_loop(&trs, &t, fuel)
                .ok_or_else(|| not_found(format!("no innermost cycle found from {t}"), fuel))?;
            let chain = chain_from_loop(&trs, &cert, length, fuel).map_err(|e| Report {
                code: EXIT_NOT_FOUND,
                body: json!({"status": "not-found", "detail": e.to_string(), "fuel": fuel}),
            })?;
            let witness: Json = serde_json::from_str(&print_chain_witness(&chain.witness)).expect("witness json");
            ok(json!({
                "status": "verified",
                "fuel": fuel,
                "certificate": certificate_json(&cert),
                "witness": witness,
                "traces": traces_json(&chain.links),
            }))
        }
        Command::Pvs0Eval { program, input, expect } => {
            let p = load_program(&program)?;
            let v = tuple(&p, &input)?;
            match expect {
                None => match chi_eval(&p, &p.body, &v, fuel) {
                    Some(out) => ok(json!({"status": "success", "value": out.to_string(), "fuel": fuel})),
                    None => Err(Report {
                        code: EXIT_NOT_FOUND,
                        body: json!({"status": "unknown", "detail": "⋄: no value within fuel", "fuel": fuel}),
                    }),
                },
                Some(expected) => {
                    let expected = tuple(&p, &expected)?;
                    match epsilon_check(&p, &p.body, &v, &expected, fuel) {
                        EpsilonVerdict::Holds { fuel: least } => ok(json!({
                            "status": "verified",
                            "value": expected.to_string(),
                            "least_fuel": least,
                            "fuel": fuel,
                        })),
                        EpsilonVerdict::Refuted { actual, fuel: least } => Err(Report {
                            code: EXIT_NOT_FOUND,
                            body: json!({
                                "status": "failure",
                                "detail": format!("evaluates to {actual}, not {expected}"),
                                "value": actual.to_string(),
                                "least_fuel": least,
                                "fuel": fuel,
                            }),
                        }),
                        EpsilonVerdict::UnknownWithinFuel { fuel } => Err(Report {
                            code: EXIT_NOT_FOUND,
                            body: json!({"status": "unknown", "detail": "no value within fuel", "fuel": fuel}),
                        }),
                    }
                }
            }
        }
        Command::Pvs0Terminates { program, input } => {
            let p = load_program(&program)?;
            let v = tuple(&p, &input)?;
            match terminates_on(&p, &v, fuel) {
                TerminationProbe::Terminates { fuel: least, value } => ok(json!({
                    "status": "verified",
                    "least_fuel": least,
                    "value": value.to_string(),
                    "fuel": fuel,
                })),
                TerminationProbe::UnknownWithinFuel { fuel } => Err(Report {
                    code: EXIT_NOT_FOUND,
                    body: json!({"status": "unknown", "detail": "no value within fuel", "fuel": fuel}),
                }),
            }
        }
        Command::Pvs0Contexts { program } => {
            let p = load_program(&program)?;
            let contexts: Vec<Json> = calling_contexts(&p)
                .iter()
                .map(|c| {
                    json!({
                        "path": c.path_string(),
                        "condition": c.condition.iter().map(|(g, pol)| {
                            if *pol { g.to_string() } else { format!("not {g}") }
                        }).collect::<Vec<_>>(),
                        "actual": c.actual.to_string(),
                    })
                })
                .collect();
            ok(json!({"status": "success", "count": contexts.len(), "contexts": contexts}))
        }
        Command::CcDpCheck {
            program,
            trs,
            pairs,
            samples,
            encode,
            succ,
            zero,
        } => {
            let p = load_program(&program)?;
            let trs = load_trs(&trs)?;
            let pairs = pairs
                .iter()
                .map(|text| parse_pair(text))
                .collect::<Result<Vec<_>, _>>()?;
            let samples = match samples {
                Some(text) => text
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| tuple(&p, s))
                    .collect::<Result<Vec<_>, _>>()?,
                None => grid(p.width, 3),
            };
            let encoding = NaturalEncoding::new(&encode, &succ, &zero);
            let report =
                check_cc_dp_correspondence(&p, &trs, &encoding, &pairs, &samples, fuel).map_err(input_error)?;
            let body = json!({
                "status": if report.pass { "verified" } else { "failure" },
                "samples": report.samples,
                "fuel": fuel,
                "pairs": serde_json::to_value(&report.pairs).expect("report serializes"),
            });
            Ok(Report {
                code: if report.pass { EXIT_OK } else { EXIT_NOT_FOUND },
                body,
            })
        }
    }
}

fn parse_pair(text: &str) -> Result<(usize, rdp_core::dp::DepPairAlt), Report> {
    let bad = || input_error(format!("pair {text:?}: expected CONTEXT:RULE:POSITION"));
    let mut parts = text.splitn(3, ':');
    let context = parts.next().and_then(|c| c.trim().parse().ok()).ok_or_else(bad)?;
    let rule = parts.next().and_then(|r| r.trim().parse().ok()).ok_or_else(bad)?;
    let position: Position = parts.next().unwrap_or("").trim().parse().map_err(|_| bad())?;
    Ok((context, rdp_core::dp::DepPairAlt::new(rule, position)))
}

/// All tuples of the given width with components in `0..=max`.
fn grid(width: usize, max: u64) -> Vec<Value> {
    (0..width)
        .fold(vec![Vec::new()], |acc, _| {
            acc.into_iter()
                .flat_map(|prefix| {
                    (0..=max).map(move |c| {
                        let mut next = prefix.clone();
                        next.push(c);
                        next
                    })
                })
                .collect()
        })
        .into_iter()
        .map(Value::new)
        .collect()
}
