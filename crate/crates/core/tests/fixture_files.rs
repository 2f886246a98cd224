use std::path::PathBuf;

use rdp_core::fixtures::{ackermann_program, ackermann_trs, grow_trs, hg_trs, loop_trs};
use rdp_core::pvs0::{chi_eval, Pvs0Expr, Pvs0Program, Value};
use rdp_core::syntax::{parse_chain_witness, parse_trs};

fn read(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn trs_files_match_builtin_systems() {
    assert_eq!(parse_trs(&read("ackermann.trs")).unwrap(), ackermann_trs());
    assert_eq!(parse_trs(&read("loop.trs")).unwrap(), loop_trs());
    assert_eq!(parse_trs(&read("hg.trs")).unwrap(), hg_trs());
    assert_eq!(parse_trs(&read("grow.trs")).unwrap(), grow_trs());
}

#[test]
fn program_file_matches_builtin_program() {
    let p = Pvs0Program::from_json(&read("ackermann.pvs0.json")).unwrap();
    assert_eq!(p, ackermann_program());
    assert_eq!((p.o1.len(), p.o2.len()), (5, 1));
}

#[test]
fn out_of_range_operator_parses_and_is_undefined() {
    let mut p: serde_json::Value = serde_json::from_str(&read("ackermann.pvs0.json")).unwrap();
    p["body"] = serde_json::json!({"op1": [9, "vr"]});
    let program = Pvs0Program::from_json(&p.to_string()).unwrap();
    assert_eq!(program.body, Pvs0Expr::op1(9, Pvs0Expr::Vr));
    assert_eq!(chi_eval(&program, &program.body, &Value::from((1, 1)), 100), None);
}

#[test]
fn wrong_width_is_rejected() {
    let mut p: serde_json::Value = serde_json::from_str(&read("ackermann.pvs0.json")).unwrap();
    p["false_val"] = serde_json::json!([0, 0, 0]);
    assert!(matches!(
        Pvs0Program::from_json(&p.to_string()),
        Err(rdp_core::pvs0::Pvs0Error::WidthMismatch { .. })
    ));
}

#[test]
fn witness_files_parse() {
    let ack = ackermann_trs();
    assert_eq!(
        parse_chain_witness(&ack, &read("ackermann-chain.json")).unwrap().len(),
        2
    );
    assert_eq!(
        parse_chain_witness(&ack, &read("ackermann-root-chain.json"))
            .unwrap()
            .len(),
        2
    );
    assert_eq!(
        parse_chain_witness(&loop_trs(), &read("loop-chain.json"))
            .unwrap()
            .len(),
        5
    );
}
