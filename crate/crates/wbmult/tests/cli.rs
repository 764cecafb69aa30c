use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn wbmult(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbmult")).args(args).current_dir(root()).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wbmult-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const G1_CLAIMED_INVERTIBLE: &str = r#"id = "g1-invertible"
m = "t^(-1)"
phi = """
seq phi
block t>=1 {
  repeat 1: [ (w=1, idx=t) ]
}
"""

[expected]
uc = "yes"
inv = "invertible"
operator = "G1"

[cell]
table = 10
phi = "SN"
psi = "SN"
symbol = "bounded"
subclaim = "inv"
"#;

#[test]
fn classify_prints_summary() {
    let out = wbmult(&["classify", "corpus/seq/en_over_n.seq"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "Bessel non-frame, NBA, non-NBB, B=1\n");
}

#[test]
fn analyze_exit_codes() {
    let ok = wbmult(&["analyze", "corpus/table3/bb7.iv.case"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.contains("operator G1") && text.contains("NonInv_RangeGap"), "{}", text);

    let missing = wbmult(&["analyze", "missing.case"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8(missing.stderr).unwrap().contains("missing.case"));

    let bad = scratch("malformed.case");
    std::fs::write(&bad, "id = \"broken\"\nm = [unclosed\n").unwrap();
    assert_eq!(wbmult(&["analyze", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn fabricated_claim_fails_with_range_gap() {
    let p = scratch("g1-invertible.case");
    std::fs::write(&p, G1_CLAIMED_INVERTIBLE).unwrap();
    let out = wbmult(&["analyze", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[FAIL]"), "{}", text);
    assert!(text.contains("NonInv_RangeGap"), "{}", text);
}

#[test]
fn truncate_exports_matrix() {
    let csv = scratch("r1a.csv");
    let out = wbmult(&["truncate", "corpus/table1/r1.a.case", "--n", "8", "--export-matrix", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
    let stress = wbmult(&["stress", "corpus/table1/r1.a.case", "--blocks", "100"]);
    assert!(stress.status.success());
    assert!(String::from_utf8(stress.stdout).unwrap().contains("PositiveOnly T=100: 10.000000000000"));
}

#[test]
fn verify_tables_is_deterministic() {
    let (a, b) = (scratch("run-a.json"), scratch("run-b.json"));
    for p in [&a, &b] {
        let out = wbmult(&["verify-tables", "--probes", "10", "--json", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("10 tables, 270 cells: 270 confirmed, 0 violated, 0 uncovered"), "{}", text);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
