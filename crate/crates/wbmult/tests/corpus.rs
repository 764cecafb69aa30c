use std::path::{Path, PathBuf};
use wbmult::analyzer::{InvVerdict, OperatorKind, Rule, UcVerdict};
use wbmult::corpus::{
    load_case, load_corpus, load_tables, negative_controls, parse_case, verify_case, verify_corpus, verify_tables,
    CellStatus, SymbolColumn, VerifyOptions,
};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn exact_only() -> VerifyOptions {
    VerifyOptions { numeric: false, ..VerifyOptions::default() }
}

#[test]
fn loads_reference_cases() {
    let rry = load_case(&corpus().join("table10/rry.case")).unwrap();
    assert_eq!(rry.expected.operator, Some(OperatorKind::Identity));
    assert_eq!((rry.cell.table, rry.cell.symbol), (10, SymbolColumn::Sn));
    let r1a = load_case(&corpus().join("table1/r1.a.case")).unwrap();
    assert_eq!((r1a.expected.uc, r1a.expected.inv), (UcVerdict::No, InvVerdict::Invertible));
    assert!(r1a.stress.is_some());
}

#[test]
fn malformed_case_is_a_parse_error() {
    let p = Path::new("broken.case");
    assert!(parse_case("id = \"x\"\nm = ", p).is_err());
    assert!(parse_case("id = \"x\"\nm = \"1\"\nphi = \"seq phi\\nblock t>=1 { repeat 1: [ (w=, idx=t) ] }\"\n", p).is_err());
}

#[test]
fn witness_and_power_cases() {
    let c = load_case(&corpus().join("table1/nbnb15i.case")).unwrap();
    let r = verify_case(&c, &VerifyOptions::default());
    assert!(r.pass, "{:?}", r.checks);
    let a = r.forward.as_ref().unwrap();
    let rules: Vec<Rule> = a.certificates.iter().map(|c| c.rule).collect();
    assert!(rules.contains(&Rule::RescalingWitness) && rules.contains(&Rule::Inv_Identity), "{:?}", rules);

    let g = load_case(&corpus().join("table3/bb7.iv.case")).unwrap();
    let r = verify_case(&g, &VerifyOptions::default());
    assert!(r.pass, "{:?}", r.checks);
    let a = r.forward.as_ref().unwrap();
    assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::Yes, InvVerdict::NonInvertible, OperatorKind::G(1)));
}

#[test]
fn negative_controls_all_fail() {
    let cases = load_corpus(&corpus()).unwrap();
    let controls = negative_controls(&cases);
    assert_eq!(controls.len(), 10);
    for r in verify_corpus(&controls, &exact_only()) {
        assert!(!r.pass, "{} passes despite a flipped expectation", r.id);
    }
}

#[test]
fn empty_corpus_leaves_cells_uncovered() {
    let rows = load_tables(&corpus().join("tables.toml")).unwrap();
    let (cells, summary) = verify_tables(&rows, &[], &[], &VerifyOptions { probes: 0, ..exact_only() });
    assert_eq!(summary.cells, cells.len());
    assert_eq!(summary.confirmed, 0);
    assert!(cells.iter().all(|c| matches!(c.status, CellStatus::Uncovered(_))));
}
