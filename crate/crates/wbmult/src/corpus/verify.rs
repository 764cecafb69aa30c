use super::cases::{CellRef, ExampleCase, Expectation, Subclaim};
use super::probes::{Probe, ProbeGenerator};
use super::tables::{table_kinds, CellSpec, Claim, TableRow};
use crate::analyzer::{analyze, Analysis, InvVerdict, OperatorKind, Rule, UcVerdict};
use crate::numeric::{identity_deviation, rearrangement_stress, singular_extremes, truncate_matrix, StressStrategy};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Run the floating point cross-checks.
    pub numeric: bool,
    pub probes: usize,
    pub seed: u64,
    pub identity_n: usize,
    pub budget: i64,
    pub spectra_n: Vec<usize>,
    pub stress_blocks: (i64, i64),
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            numeric: true,
            probes: 100,
            seed: 0x5eed_2011,
            identity_n: 64,
            budget: 10_000,
            spectra_n: vec![50, 200],
            stress_blocks: (100, 1000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub what: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub pass: bool,
    pub cell: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward: Option<Analysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverse: Option<Analysis>,
}

fn first_cert(a: &Analysis, uc: bool) -> Option<String> {
    a.certificates.iter().find(|c| c.rule.is_convergence() == uc).map(|c| c.to_string())
}

fn expectation_checks(dir: &str, e: &Expectation, a: &Analysis, out: &mut Vec<Check>) {
    out.push(Check {
        what: format!("{} uc", dir),
        expected: e.uc.to_string(),
        got: a.uc.to_string(),
        pass: a.uc == e.uc,
        certificate: first_cert(a, true),
    });
    out.push(Check {
        what: format!("{} inv", dir),
        expected: e.inv.to_string(),
        got: a.inv.to_string(),
        pass: a.inv == e.inv,
        certificate: first_cert(a, false),
    });
    if let Some(op) = e.operator {
        out.push(Check {
            what: format!("{} operator", dir),
            expected: op.to_string(),
            got: a.operator.to_string(),
            pass: a.operator == op,
            certificate: None,
        });
    }
}

fn numeric_checks(dir: &str, case: &ExampleCase, reverse: bool, e: &Expectation, a: &Analysis, opts: &VerifyOptions, out: &mut Vec<Check>) {
    let (phi, psi) = if reverse { (&case.psi, &case.phi) } else { (&case.phi, &case.psi) };
    match e.operator {
        Some(OperatorKind::Identity) => {
            let (what, expected) = (format!("{} identity deviation at N={}", dir, opts.identity_n), "deviation <= certified bound".to_string());
            match identity_deviation(&case.m, phi, psi, opts.identity_n, opts.budget) {
                Ok(d) => out.push(Check {
                    what,
                    expected,
                    got: format!("{:e} <= {:e}", d.deviation, d.bound),
                    pass: d.passes(),
                    certificate: None,
                }),
                Err(err) => out.push(Check { what, expected, got: err.to_string(), pass: false, certificate: None }),
            }
        }
        Some(OperatorKind::G(k)) => {
            for &n in &opts.spectra_n {
                let want = (n as f64).powi(-(k as i32));
                let what = format!("{} smallest singular value at N={}", dir, n);
                match truncate_matrix(&case.m, phi, psi, n, opts.budget).and_then(|t| singular_extremes(&t)) {
                    Ok((lo, _)) => out.push(Check {
                        what,
                        expected: format!("{:e}", want),
                        got: format!("{:e}", lo),
                        pass: ((lo - want) / want).abs() <= 1e-12,
                        certificate: None,
                    }),
                    Err(err) => out.push(Check { what, expected: format!("{:e}", want), got: err.to_string(), pass: false, certificate: None }),
                }
            }
            let gap = a.certificates.iter().find(|c| c.rule == Rule::NonInv_RangeGap);
            out.push(Check {
                what: format!("{} range gap", dir),
                expected: Rule::NonInv_RangeGap.to_string(),
                got: gap.map(|c| c.rule.to_string()).unwrap_or_else(|| "none".into()),
                pass: gap.is_some(),
                certificate: gap.map(|c| c.to_string()),
            });
        }
        _ => {}
    }
    if let (Some(f), UcVerdict::No) = (&case.stress, e.uc) {
        let (t0, t1) = opts.stress_blocks;
        let what = format!("{} rearrangement growth from T={} to T={}", dir, t0, t1);
        let run = |t| rearrangement_stress(&case.m, phi, psi, f, StressStrategy::PositiveOnly, t);
        match run(t0).and_then(|a| Ok((a, run(t1)?))) {
            Ok((a, b)) => out.push(Check {
                what,
                expected: "factor >= 3".into(),
                got: format!("{:.6} -> {:.6}", a, b),
                pass: b >= 3.0 * a,
                certificate: None,
            }),
            Err(err) => out.push(Check { what, expected: "factor >= 3".into(), got: err.to_string(), pass: false, certificate: None }),
        }
    }
}

pub fn verify_case(case: &ExampleCase, opts: &VerifyOptions) -> CaseReport {
    let mut checks = Vec::new();
    let run = |dir: &str, reverse: bool, e: &Expectation, checks: &mut Vec<Check>| -> Option<Analysis> {
        let (phi, psi) = if reverse { (&case.psi, &case.phi) } else { (&case.phi, &case.psi) };
        let w = case.witness.as_ref().map(|w| if reverse { w.swapped() } else { w.clone() });
        match analyze(&case.m, phi, psi, w.as_ref()) {
            Ok(a) => {
                expectation_checks(dir, e, &a, checks);
                if opts.numeric {
                    numeric_checks(dir, case, reverse, e, &a, opts, checks);
                }
                Some(a)
            }
            Err(err) => {
                checks.push(Check {
                    what: format!("{} analysis", dir),
                    expected: "verdicts".into(),
                    got: err.to_string(),
                    pass: false,
                    certificate: None,
                });
                None
            }
        }
    };
    let forward = run("M(m,phi,psi)", false, &case.expected, &mut checks);
    let reverse = case.reverse.as_ref().and_then(|e| run("M(m,psi,phi)", true, e, &mut checks));
    CaseReport {
        id: case.id.clone(),
        pass: checks.iter().all(|c| c.pass),
        cell: case.cell.to_string(),
        checks,
        forward,
        reverse,
    }
}

/// Reports in the order of `cases`.
pub fn verify_corpus(cases: &[ExampleCase], opts: &VerifyOptions) -> Vec<CaseReport> {
    cases.par_iter().map(|c| verify_case(c, opts)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "by")]
pub enum CellStatus {
    Confirmed,
    Violated(String),
    Uncovered(String),
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellStatus::Confirmed => write!(f, "Confirmed"),
            CellStatus::Violated(s) => write!(f, "Violated({})", s),
            CellStatus::Uncovered(s) => write!(f, "Uncovered({})", s),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub cell: String,
    pub claim: Claim,
    /// Cases the status rests on.
    pub cases: Vec<String>,
    pub probes: usize,
    /// Certificate rules the probes produced, with counts.
    pub rules: BTreeMap<String, usize>,
    pub status: CellStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TableSummary {
    pub tables: usize,
    pub cells: usize,
    pub confirmed: usize,
    pub violated: usize,
    pub uncovered: usize,
    pub cases: usize,
    pub cases_passed: usize,
}

/// Cited case ids with no case file.
pub fn completeness(rows: &[TableRow], cases: &[ExampleCase]) -> Vec<String> {
    let have: BTreeSet<&str> = cases.iter().map(|c| c.id.as_str()).collect();
    let mut missing: Vec<String> = rows
        .iter()
        .flat_map(|r| r.cells.iter().flat_map(|(_, c)| c.cases.iter()))
        .filter(|id| !have.contains(id.as_str()))
        .cloned()
        .collect();
    missing.sort();
    missing.dedup();
    missing
}

/// How one multiplier bears on a decided claim.
enum Outcome {
    Supports(Vec<Rule>),
    Refutes(String),
    Silent(String),
}

fn judge(a: &Analysis, claim: Claim, sub: Subclaim, rules: &[Rule]) -> Outcome {
    let hits: Vec<Rule> = a.certificates.iter().map(|c| c.rule).filter(|r| rules.contains(r)).collect();
    let both = a.uc == UcVerdict::Yes && sub.matches(a.inv);
    match claim {
        Claim::NotPossible => {
            if both {
                return Outcome::Refutes(format!("uc {} and {}", a.uc, a.inv));
            }
            if !hits.is_empty() {
                return Outcome::Supports(hits);
            }
            // the conjunction already fails at convergence
            let uc_no = matches!(a.uc, UcVerdict::No | UcVerdict::NotWellDefined);
            match a.certificates.iter().find(|c| c.rule.is_convergence() && uc_no) {
                Some(c) => Outcome::Supports(vec![c.rule]),
                None => Outcome::Silent(format!("uc {}, inv {}, no cited certificate", a.uc, a.inv)),
            }
        }
        Claim::Always => {
            if both && !hits.is_empty() {
                Outcome::Supports(hits)
            } else if a.uc == UcVerdict::Unknown || a.inv == InvVerdict::Unknown {
                Outcome::Silent(format!("uc {}, inv {}", a.uc, a.inv))
            } else if both {
                Outcome::Silent("verdict without the cited certificate".into())
            } else {
                Outcome::Refutes(format!("uc {} and {}", a.uc, a.inv))
            }
        }
        Claim::Possible => Outcome::Silent("not a decided claim".into()),
    }
}

fn probe_analyses(p: &Probe) -> Result<Vec<Analysis>, String> {
    let f = analyze(&p.m, &p.phi, &p.psi, None).map_err(|e| e.to_string())?;
    let r = analyze(&p.m, &p.psi, &p.phi, None).map_err(|e| e.to_string())?;
    Ok(vec![f, r])
}

struct ProbeRun {
    analyses: Vec<(usize, Vec<Analysis>)>,
    wanted: usize,
}

fn run_probes(row: &TableRow, col: super::cases::SymbolColumn, seed: u64, count: usize) -> ProbeRun {
    let gen = ProbeGenerator::new(seed, table_kinds(row.table), (row.phi, row.psi), col);
    let mut analyses = Vec::new();
    // a probe whose analysis errors is replaced, up to a bounded number of draws
    for (i, p) in gen.take(count * 3).enumerate() {
        if analyses.len() == count {
            break;
        }
        if let Ok(a) = probe_analyses(&p) {
            analyses.push((i, a));
        }
    }
    ProbeRun { analyses, wanted: count }
}

fn decide_cell(
    cell: &CellRef,
    claim: Claim,
    spec: &CellSpec,
    cases: &[ExampleCase],
    reports: &BTreeMap<&str, &CaseReport>,
    probes: Option<&ProbeRun>,
) -> CellReport {
    let label = cell.to_string();
    let mut used = Vec::new();
    let mut rules: BTreeMap<String, usize> = BTreeMap::new();
    let done = |status, used, rules, n| CellReport { cell: label.clone(), claim, cases: used, probes: n, rules, status };
    for id in &spec.cases {
        match reports.get(id.as_str()) {
            None => return done(CellStatus::Uncovered(format!("missing case {}", id)), used, rules, 0),
            Some(r) if !r.pass => return done(CellStatus::Violated(format!("case {} fails", id)), used, rules, 0),
            _ => {}
        }
    }
    if claim == Claim::Possible {
        for id in &spec.cases {
            let c = match cases.iter().find(|c| &c.id == id) {
                Some(c) => c,
                None => continue,
            };
            if c.cell == *cell && c.expected.uc == UcVerdict::Yes && cell.subclaim.matches(c.expected.inv) {
                used.push(id.clone());
            }
        }
        let status = if used.is_empty() { CellStatus::Uncovered("no cited case for this subclaim".into()) } else { CellStatus::Confirmed };
        return done(status, used, rules, 0);
    }
    let by = spec.by.expect("decided cells carry a citation");
    let same = |c: &&ExampleCase| {
        c.cell.table == cell.table && c.cell.phi == cell.phi && c.cell.psi == cell.psi && c.cell.symbol == cell.symbol
    };
    for c in cases.iter().filter(same) {
        let r = match reports.get(c.id.as_str()) {
            Some(r) => r,
            None => continue,
        };
        for a in r.forward.iter().chain(r.reverse.iter()) {
            if let Outcome::Refutes(why) = judge(a, claim, cell.subclaim, by.rules()) {
                if claim == Claim::NotPossible {
                    return done(CellStatus::Violated(format!("case {}: {}", c.id, why)), used, rules, 0);
                }
                // an ALWAYS cell collects cases of either subclaim; only its own must agree
                if c.cell.subclaim == cell.subclaim {
                    return done(CellStatus::Violated(format!("case {}: {}", c.id, why)), used, rules, 0);
                }
            }
        }
        used.push(c.id.clone());
    }
    let run = match probes {
        Some(p) => p,
        None => return done(CellStatus::Uncovered("no probes".into()), used, rules, 0),
    };
    for (i, pair) in &run.analyses {
        for a in pair {
            match judge(a, claim, cell.subclaim, by.rules()) {
                Outcome::Supports(hit) => {
                    for r in hit {
                        *rules.entry(r.to_string()).or_default() += 1;
                    }
                }
                Outcome::Refutes(why) => {
                    return done(CellStatus::Violated(format!("probe {}: {}", i, why)), used, rules, run.analyses.len())
                }
                Outcome::Silent(why) => {
                    return done(CellStatus::Uncovered(format!("probe {}: {}", i, why)), used, rules, run.analyses.len())
                }
            }
        }
    }
    if run.analyses.is_empty() && used.is_empty() {
        return done(CellStatus::Uncovered("no cases and no probes".into()), used, rules, 0);
    }
    if run.analyses.len() < run.wanted {
        let why = format!("only {} of {} probes drawn", run.analyses.len(), run.wanted);
        return done(CellStatus::Uncovered(why), used, rules, run.analyses.len());
    }
    done(CellStatus::Confirmed, used, rules, run.analyses.len())
}

/// Status of every subcell, in table order, with a summary.
pub fn verify_tables(
    rows: &[TableRow],
    cases: &[ExampleCase],
    reports: &[CaseReport],
    opts: &VerifyOptions,
) -> (Vec<CellReport>, TableSummary) {
    let by_id: BTreeMap<&str, &CaseReport> = reports.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut jobs = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        for (ci, (col, spec)) in row.cells.iter().enumerate() {
            let decided = [spec.inv, spec.noninv].iter().any(|c| *c != Claim::Possible);
            jobs.push((ri, ci, *col, spec, decided));
        }
    }
    let probe_runs: Vec<Option<ProbeRun>> = jobs
        .par_iter()
        .map(|&(ri, ci, col, _, decided)| {
            decided.then(|| {
                let seed = opts.seed ^ ((ri * 3 + ci) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                run_probes(&rows[ri], col, seed, opts.probes)
            })
        })
        .collect();
    let mut out = Vec::new();
    for (&(ri, _, col, spec, _), run) in jobs.iter().zip(&probe_runs) {
        let row = &rows[ri];
        for (sub, claim) in [(Subclaim::Inv, spec.inv), (Subclaim::NonInv, spec.noninv)] {
            let cell = CellRef { table: row.table, phi: row.phi, psi: row.psi, symbol: col, subclaim: sub };
            out.push(decide_cell(&cell, claim, spec, cases, &by_id, run.as_ref()));
        }
    }
    let tables: BTreeSet<u8> = rows.iter().map(|r| r.table).collect();
    let summary = TableSummary {
        tables: tables.len(),
        cells: out.len(),
        confirmed: out.iter().filter(|c| c.status == CellStatus::Confirmed).count(),
        violated: out.iter().filter(|c| matches!(c.status, CellStatus::Violated(_))).count(),
        uncovered: out.iter().filter(|c| matches!(c.status, CellStatus::Uncovered(_))).count(),
        cases: reports.len(),
        cases_passed: reports.iter().filter(|r| r.pass).count(),
    };
    (out, summary)
}

/// Ten corpus cases with one expected flag flipped each; every one must fail.
pub fn negative_controls(cases: &[ExampleCase]) -> Vec<ExampleCase> {
    let step = (cases.len() / 10).max(1);
    cases
        .iter()
        .step_by(step)
        .take(10)
        .enumerate()
        .map(|(i, c)| {
            let mut c = c.clone();
            c.id = format!("{}~flipped", c.id);
            let e = &mut c.expected;
            if i % 2 == 0 {
                e.inv = match e.inv {
                    InvVerdict::Invertible => InvVerdict::NonInvertible,
                    _ => InvVerdict::Invertible,
                };
            } else {
                e.uc = match e.uc {
                    UcVerdict::Yes => UcVerdict::No,
                    _ => UcVerdict::Yes,
                };
            }
            c
        })
        .collect()
}
