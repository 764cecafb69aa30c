//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line, then exits nonzero if any failed.

use num::rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use wbmult::analyzer::{analyze, decide_unconditional, Analysis, Context, InvVerdict, OperatorKind, Rule, UcVerdict};
use wbmult::corpus::{
    completeness, load_corpus, load_tables, verify_corpus, verify_tables, CaseReport, ExampleCase, NormClass,
    ProbeGenerator, SymbolColumn, VerifyOptions,
};
use wbmult::numeric::{frame_bounds_numeric, identity_deviation, rearrangement_stress, singular_extremes, truncate_matrix, StressStrategy};
use wbmult::scalar::{ExactScalar, ScalarSum};
use wbmult::sequence::classify::frame_profile;
use wbmult::sequence::{classify_sequence, Kind, SequenceClass, SequenceSpec};
use wbmult::series::Extreme;

const BUDGET: i64 = 10_000;

/// Sequences whose truncated frame operator is checked against the exact profile.
const FRAME_CASES: [&str; 20] = [
    "ex11table4", "fb1.i", "fb10", "fb11.i", "fb6", "ff1.i", "ff11", "ff12", "ff6", "ff9.i", "fnb11.i", "fnb13", "fnb2",
    "fnb33", "fnb39.i", "fnb51", "fnb5b", "fnb9", "bnb17.i", "bnbnew3",
];

type Outcome = Result<String, String>;

struct Corpus {
    cases: Vec<ExampleCase>,
    reports: Vec<CaseReport>,
    opts: VerifyOptions,
    seconds: f64,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn case<'a>(c: &'a Corpus, id: &str) -> Result<&'a ExampleCase, String> {
    c.cases.iter().find(|x| x.id == id).ok_or_else(|| format!("case {} missing", id))
}

/// `(label, phi, psi, expected operator, analysis)` for both directions of every case.
fn directions(c: &Corpus) -> Vec<(String, &ExampleCase, bool, OperatorKind, &Analysis)> {
    let mut out = Vec::new();
    for (case, r) in c.cases.iter().zip(&c.reports) {
        let sides = [(false, Some(&case.expected), r.forward.as_ref()), (true, case.reverse.as_ref(), r.reverse.as_ref())];
        for (rev, e, a) in sides {
            if let (Some(e), Some(a)) = (e, a) {
                if let Some(op) = e.operator {
                    let label = if rev { format!("{} reverse", case.id) } else { case.id.clone() };
                    out.push((label, case, rev, op, a));
                }
            }
        }
    }
    out
}

fn sides(case: &ExampleCase, rev: bool) -> (&SequenceSpec, &SequenceSpec) {
    if rev {
        (&case.psi, &case.phi)
    } else {
        (&case.phi, &case.psi)
    }
}

fn corpus_verdicts(c: &Corpus) -> Outcome {
    let unknown = c
        .reports
        .iter()
        .flat_map(|r| r.forward.iter().chain(r.reverse.iter()).map(move |a| (r, a)))
        .filter(|(_, a)| a.uc == UcVerdict::Unknown || a.inv == InvVerdict::Unknown)
        .map(|(r, _)| r.id.clone())
        .collect::<Vec<_>>();
    let failed = c.reports.iter().filter(|r| !r.pass).map(|r| r.id.clone()).collect::<Vec<_>>();
    let detail = format!("{} cases, {} failing, {} unknown verdicts, {:.1} s", c.reports.len(), failed.len(), unknown.len(), c.seconds);
    if c.reports.len() >= 110 && failed.is_empty() && unknown.is_empty() && c.seconds <= 60.0 {
        Ok(detail)
    } else {
        Err(format!("{}; failing {:?}; unknown {:?}", detail, failed, unknown))
    }
}

fn table_cells(c: &Corpus) -> Outcome {
    let rows = load_tables(&corpus_dir().join("tables.toml")).map_err(|e| e.to_string())?;
    let missing = completeness(&rows, &c.cases);
    let (cells, s) = verify_tables(&rows, &c.cases, &c.reports, &c.opts);
    let detail = format!(
        "{} tables, {} cells: {} confirmed, {} violated, {} uncovered, {} probes per decided cell",
        s.tables, s.cells, s.confirmed, s.violated, s.uncovered, c.opts.probes
    );
    if s.tables == 10 && s.confirmed == s.cells && s.violated == 0 && missing.is_empty() {
        Ok(detail)
    } else {
        let bad: Vec<String> = cells
            .iter()
            .filter(|x| x.status != wbmult::corpus::CellStatus::Confirmed)
            .map(|x| format!("{} {}: {}", x.cell, x.claim, x.status))
            .collect();
        Err(format!("{}; missing {:?}; {:?}", detail, missing, bad))
    }
}

fn identity_exactness(c: &Corpus) -> Outcome {
    let mut checked = 0;
    let mut finite = 0;
    let mut bad = Vec::new();
    for (label, case, rev, op, _) in directions(c) {
        if op != OperatorKind::Identity {
            continue;
        }
        let (phi, psi) = sides(case, rev);
        match identity_deviation(&case.m, phi, psi, 64, BUDGET) {
            Ok(d) => {
                checked += 1;
                finite += d.finite as usize;
                if d.deviation > d.bound || (d.finite && d.deviation != 0.0) {
                    bad.push(format!("{}: {:e} vs bound {:e}", label, d.deviation, d.bound));
                }
            }
            Err(e) => bad.push(format!("{}: {}", label, e)),
        }
    }
    let first = case(c, "nbnb1.i")?;
    let d = identity_deviation(&first.m, &first.phi, &first.psi, 64, BUDGET).map_err(|e| e.to_string())?;
    if !(d.finite && d.deviation == 0.0) {
        bad.push(format!("nbnb1.i: finite={} deviation {:e}", d.finite, d.deviation));
    }
    let detail = format!("{} identity operators at N=64, {} of them finite with deviation exactly 0", checked, finite);
    if bad.is_empty() && checked > 0 && finite > 0 {
        Ok(detail)
    } else {
        Err(format!("{}; {:?}", detail, bad))
    }
}

fn g_spectra(c: &Corpus) -> Outcome {
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (label, case, rev, op, a) in directions(c) {
        let OperatorKind::G(k) = op else { continue };
        checked += 1;
        let (phi, psi) = sides(case, rev);
        for n in [50usize, 200] {
            let want = (n as f64).powi(-(k as i32));
            match truncate_matrix(&case.m, phi, psi, n, BUDGET).and_then(|t| singular_extremes(&t)) {
                Ok((lo, _)) => {
                    let rel = ((lo - want) / want).abs();
                    worst = worst.max(rel);
                    if rel > 1e-12 {
                        bad.push(format!("{} N={}: {:e} vs {:e}", label, n, lo, want));
                    }
                }
                Err(e) => bad.push(format!("{} N={}: {}", label, n, e)),
            }
        }
        if !a.certificates.iter().any(|x| x.rule == Rule::NonInv_RangeGap) {
            bad.push(format!("{}: no range gap certificate", label));
        }
    }
    let detail = format!("{} G_k operators, worst relative error {:.2e}, all with NonInv_RangeGap", checked, worst);
    if bad.is_empty() && checked > 0 {
        Ok(detail)
    } else {
        Err(format!("{}; {:?}", detail, bad))
    }
}

fn conditional_witness(c: &Corpus) -> Outcome {
    let r = case(c, "r1.a")?;
    let f = r.stress.as_ref().ok_or("r1.a has no stress profile")?;
    let run = |t: i64| rearrangement_stress(&r.m, &r.phi, &r.psi, f, StressStrategy::PositiveOnly, t).map_err(|e| e.to_string());
    let (a, b) = (run(100)?, run(1000)?);
    let near_root = |v: f64, t: f64| (v / t.sqrt() - 1.0).abs() <= 0.01;
    let cx = Context::new(&r.m, &r.phi, &r.psi, None).map_err(|e| e.to_string())?;
    let (uc, certs) = decide_unconditional(&cx).map_err(|e| e.to_string())?;
    let rule = certs.iter().find(|x| x.rule == Rule::NotUC_NBB_NotBessel);
    let detail = format!("T=100 -> {:.4}, T=1000 -> {:.4}, uc {} via {}", a, b, uc, rule.map_or("none".into(), |x| x.rule.to_string()));
    if a >= 10.0 && b >= 31.0 && near_root(a, 100.0) && near_root(b, 1000.0) && uc == UcVerdict::No && rule.is_some() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Exact `(min, max)` of `S_k` over `k <= n`.
fn exact_window(phi: &SequenceSpec, n: i64) -> Result<(ScalarSum, ScalarSum), String> {
    let p = frame_profile(phi, false).map_err(|e| e.to_string())?;
    let mut lo: Option<ScalarSum> = None;
    let mut hi: Option<ScalarSum> = None;
    for k in 1..=n {
        let v = match p.value_at(k).map_err(|e| e.to_string())? {
            Extreme::Exact(v) => v,
            other => return Err(format!("S_{} is not exact: {}", k, other)),
        };
        let below = |x: &ScalarSum| v.cmp(x).map(|o| o.is_lt()).unwrap_or(false);
        let above = |x: &ScalarSum| v.cmp(x).map(|o| o.is_gt()).unwrap_or(false);
        if lo.as_ref().is_none_or(below) {
            lo = Some(v.clone());
        }
        if hi.as_ref().is_none_or(above) {
            hi = Some(v.clone());
        }
    }
    Ok((lo.unwrap_or_default(), hi.unwrap_or_default()))
}

fn frame_cross_check(c: &Corpus) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for id in FRAME_CASES {
        let phi = &case(c, id)?.phi;
        let (lo, hi) = frame_bounds_numeric(phi, 128, BUDGET).map_err(|e| format!("{}: {}", id, e))?;
        let (elo, ehi) = exact_window(phi, 128).map_err(|e| format!("{}: {}", id, e))?;
        for (got, want) in [(lo, elo.to_f64()), (hi, ehi.to_f64())] {
            let rel = ((got - want) / want).abs();
            worst = worst.max(rel);
            if !(rel <= 1e-9) {
                bad.push(format!("{}: {} vs exact {}", id, got, want));
            }
        }
    }
    let detail = format!("{} sequences at N=128, worst relative error {:.2e}", FRAME_CASES.len(), worst);
    if bad.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {:?}", detail, bad))
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn monomial() -> impl Strategy<Value = ExactScalar> {
    (-12i64..=12, 1i64..=12, prop::sample::select(vec![2u64, 3, 5]), -3i64..=3, prop::sample::select(vec![1i64, 2, 3, 4]))
        .prop_map(|(n, d, p, en, ed)| ExactScalar::from_frac(n, d).mul(&ExactScalar::prime_power(p, Ratio::new(en, ed)).unwrap()))
}

fn scalar_sum() -> impl Strategy<Value = ScalarSum> {
    prop::collection::vec(monomial(), 1..=3).prop_map(|xs| {
        let mut s = ScalarSum::zero();
        for x in &xs {
            s.add_scalar(x);
        }
        s
    })
}

fn field_axioms() -> Result<usize, String> {
    let n = 10_000;
    let mut r = runner(n);
    r.run(&(scalar_sum(), scalar_sum(), scalar_sum(), monomial()), |(a, b, c, x)| {
        let zero = ScalarSum::zero();
        let one = ScalarSum::from_int(1);
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.add(&zero), a.clone());
        prop_assert_eq!(a.mul(&one), a.clone());
        prop_assert!(a.add(&a.neg()).is_zero());
        if !x.is_zero() {
            prop_assert_eq!(x.mul(&x.recip().unwrap()), ExactScalar::one());
        }
        let (fa, fb) = (a.to_f64(), b.to_f64());
        prop_assert!((a.mul(&b).to_f64() - fa * fb).abs() <= 1e-9 * (1.0 + (fa * fb).abs()));
        if (fa - fb).abs() > 1e-9 * (1.0 + fa.abs() + fb.abs()) {
            let ord = a.cmp(&b).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(ord, fa.partial_cmp(&fb).unwrap());
        }
        Ok(())
    })
    .map_err(|e| format!("scalar axioms: {}", e))?;
    Ok(n as usize)
}

fn transpose_duality(c: &Corpus) -> Result<usize, String> {
    let mut n = 0;
    for case in &c.cases {
        if !case.phi.is_aligned(&case.psi) {
            continue;
        }
        let a = truncate_matrix(&case.m, &case.phi, &case.psi, 64, BUDGET).map_err(|e| format!("{}: {}", case.id, e))?;
        let b = truncate_matrix(&case.m, &case.psi, &case.phi, 64, BUDGET).map_err(|e| format!("{}: {}", case.id, e))?;
        let t = a.transpose();
        let off = t.matrix.iter().zip(&b.matrix).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if off > 1e-12 {
            return Err(format!("transpose duality fails for {} by {:e}", case.id, off));
        }
        n += 1;
    }
    Ok(n)
}

fn hierarchy(c: &SequenceClass) -> Result<(), String> {
    let checks = [
        (!c.riesz || c.frame, "Riesz basis that is not a frame"),
        (!c.frame || c.bessel, "frame that is not Bessel"),
        (!c.frame || c.complete, "frame that is not complete"),
        (!c.riesz || (c.injective && c.norm_sn), "Riesz basis with repeated index or unbounded norms"),
        (c.norm_sn == (c.nba && c.nbb), "norm-SN disagrees with NBA and NBB"),
        (!c.bessel || c.nba, "Bessel sequence with unbounded norms"),
        (!c.frame || c.lower.to_f64() <= c.upper.to_f64(), "lower frame bound above upper"),
        (c.bessel == c.upper.is_finite(), "Bessel flag disagrees with the upper bound"),
    ];
    match checks.iter().find(|(ok, _)| !ok) {
        Some((_, what)) => Err(what.to_string()),
        None => Ok(()),
    }
}

const WEIGHTS: [&str; 10] = ["1", "2", "1/2", "-1", "t^(-1)", "t", "(t+1)^(-1/2)", "(1/2)^t", "2^(1/2)", "t^(1/2)"];
const INDICES: [&str; 7] = ["t", "t+1", "2*t", "2*t+1", "1", "2", "t+2"];

fn raw_spec() -> impl Strategy<Value = String> {
    let entry = (prop::sample::select(WEIGHTS.to_vec()), prop::sample::select(INDICES.to_vec()));
    let pre = prop::collection::vec((prop::sample::select(vec!["1", "2", "1/2", "3"]), 1i64..=3), 0..=2);
    (pre, prop::collection::vec(entry, 1..=3), prop::sample::select(vec!["1", "t"])).prop_map(|(pre, es, rep)| {
        let mut s = String::from("seq random\n");
        if !pre.is_empty() {
            let items: Vec<String> = pre.iter().map(|(w, k)| format!("({}, {})", w, k)).collect();
            s += &format!("prelude [ {} ]\n", items.join(", "));
        }
        let items: Vec<String> = es.iter().map(|(w, i)| format!("(w={}, idx={})", w, i)).collect();
        s += &format!("block t>=1 {{\n  repeat {}: [ {} ]\n}}\n", rep, items.join(", "));
        s
    })
}

fn hierarchy_suite(c: &Corpus) -> Result<usize, String> {
    let mut n = 0;
    for case in &c.cases {
        for s in [&case.phi, &case.psi] {
            let cl = classify_sequence(s).map_err(|e| format!("{}: {}", case.id, e))?;
            hierarchy(&cl).map_err(|e| format!("{} {}: {}", case.id, s.name, e))?;
            n += 1;
        }
    }
    let mut r = runner(1000);
    r.run(&raw_spec(), |src| {
        let spec = SequenceSpec::parse(&src).map_err(|e| TestCaseError::fail(format!("{}\n{}", e, src)))?;
        if let Ok(cl) = classify_sequence(&spec) {
            hierarchy(&cl).map_err(|e| TestCaseError::fail(format!("{}\n{}", e, src)))?;
        }
        Ok(())
    })
    .map_err(|e| format!("hierarchy: {}", e))?;
    Ok(n + 1000)
}

/// Every corpus analysis plus probes whose first sequence is an NBB Bessel non-frame.
fn never_both(c: &Corpus) -> Result<usize, String> {
    let mut n = 0;
    let mut check = |label: &str, phi: &SequenceSpec, psi: &SequenceSpec, a: &Analysis| -> Result<(), String> {
        for s in [phi, psi] {
            let cl = classify_sequence(s).map_err(|e| e.to_string())?;
            if cl.kind() == Kind::BesselNonFrame && cl.nbb {
                n += 1;
                if a.uc == UcVerdict::Yes && a.inv == InvVerdict::Invertible {
                    return Err(format!("{}: unconditionally convergent and invertible with {} NBB Bessel non-frame", label, s.name));
                }
            }
        }
        Ok(())
    };
    for (case, r) in c.cases.iter().zip(&c.reports) {
        for a in r.forward.iter().chain(r.reverse.iter()) {
            check(&case.id, &case.phi, &case.psi, a)?;
        }
    }
    let kinds = [Kind::NotBessel, Kind::BesselNonFrame, Kind::OvercompleteFrame, Kind::RieszBasis];
    let mut seed = 0x5eed_0028u64;
    for other in kinds {
        for col in [SymbolColumn::Sn, SymbolColumn::Bounded, SymbolColumn::Unbounded] {
            seed += 1;
            let g = ProbeGenerator::new(seed, (Kind::BesselNonFrame, other), (NormClass::Sn, NormClass::Sn), col);
            for p in g.take(25) {
                let a = analyze(&p.m, &p.phi, &p.psi, None).map_err(|e| e.to_string())?;
                check("probe", &p.phi, &p.psi, &a)?;
            }
        }
    }
    Ok(n)
}

fn property_suites(c: &Corpus) -> Outcome {
    let axioms = field_axioms()?;
    let dual = transpose_duality(c)?;
    let hier = hierarchy_suite(c)?;
    let nb = never_both(c)?;
    Ok(format!(
        "{} scalar axiom cases, transpose duality on {} aligned cases, hierarchy on {} specs, never-both on {} NBB Bessel non-frame evaluations",
        axioms, dual, hier, nb
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cases = match load_corpus(&corpus_dir()) {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL corpus does not load: {}", e);
            return ExitCode::FAILURE;
        }
    };
    let opts = VerifyOptions::default();
    let reports = verify_corpus(&cases, &opts);
    let corpus = Corpus { cases, reports, opts, seconds: start.elapsed().as_secs_f64() };

    let criteria: [(&str, fn(&Corpus) -> Outcome); 7] = [
        ("corpus verdict reproduction", corpus_verdicts),
        ("table reconstruction", table_cells),
        ("identity exactness", identity_exactness),
        ("G_k spectra", g_spectra),
        ("conditional convergence witness", conditional_witness),
        ("frame bound cross-check", frame_cross_check),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f(&corpus);
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {} ({}): {} [{:.1} s]", i + 1, name, d, secs),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {} ({}): {} [{:.1} s]", i + 1, name, d, secs);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
