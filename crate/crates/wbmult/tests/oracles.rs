//! Frozen reference values for each module.

use num::rational::Ratio;
use std::cmp::Ordering;
use wbmult::analyzer::{analyze, InvVerdict, OperatorKind, Rule, UcVerdict};
use wbmult::numeric::{frame_bounds_numeric, identity_deviation, rearrangement_stress, truncate_matrix, StressStrategy};
use wbmult::scalar::{ExactScalar, ScalarError, ScalarSum};
use wbmult::sequence::classify::frame_profile;
use wbmult::sequence::dsl::parse_weight;
use wbmult::sequence::{classify_sequence, classify_symbol, SequenceSpec, SymbolKind};
use wbmult::series::{classify_series, partial_sum, tail_bound, Extreme, SeriesVerdict, TermSum};

fn spec(src: &str) -> SequenceSpec {
    SequenceSpec::parse(src).unwrap()
}

fn term(s: &str) -> TermSum {
    TermSum::from(parse_weight(s).unwrap())
}

fn scalar(s: &str) -> ExactScalar {
    let w = parse_weight(s).unwrap();
    assert!(w.shape.is_constant(), "{}", s);
    w.c.as_scalar().unwrap()
}

fn half(p: u64, e: i64, d: i64) -> ExactScalar {
    ExactScalar::prime_power(p, Ratio::new(e, d)).unwrap()
}

const BASIS: &str = "seq e\nblock t>=1 {\n  repeat 1: [ (w=1, idx=t) ]\n}\n";
const EN_OVER_N: &str = "seq phi\nblock t>=1 {\n  repeat 1: [ (w=t^(-1), idx=t) ]\n}\n";
const DOUBLED_FIRST: &str = "seq psi\nprelude [ (1, 1) ]\nblock t>=1 {\n  repeat 1: [ (w=1, idx=t) ]\n}\n";
const TRIANGLE: &str = "seq phi\nblock t>=1 {\n  repeat t: [ (w=1, idx=t) ]\n}\n";
const GEOMETRIC_ANCHOR: &str = "seq phi\nblock t>=1 {\n  repeat 1: [ (w=(2^(-1/2))^t, idx=1), (w=1, idx=t+1) ]\n}\n";

#[test]
fn cube_root_of_eight_cancels() {
    let eight_third = ExactScalar::from_int(8).pow_rat(Ratio::new(-1, 3)).unwrap();
    assert_eq!(eight_third, ExactScalar::from_frac(1, 2));
    assert_eq!(eight_third.mul(&ExactScalar::from_int(2)), ExactScalar::one());
    let quarter_root = ExactScalar::from_int(4).pow_rat(Ratio::new(-1, 2)).unwrap();
    assert_eq!(quarter_root, ExactScalar::from_frac(1, 2));
    assert!(quarter_root.is_rational());
}

#[test]
fn radical_products() {
    let r = half(2, -1, 2);
    let p = ExactScalar::from_frac(1, 2).mul(&r);
    assert_eq!(p.coeff(), &Ratio::new(1.into(), 2.into()));
    assert_eq!(p.radical().get(&2), Some(&Ratio::new(-1, 2)));
    assert_eq!(r.mul(&r), ExactScalar::from_frac(1, 2));
    assert!(r.mul(&ExactScalar::zero()).is_zero());
}

#[test]
fn radical_sums() {
    let r = half(2, -1, 2);
    assert_eq!(ExactScalar::from_frac(1, 2).add(&ExactScalar::from_frac(1, 2)).unwrap(), ExactScalar::one());
    assert_eq!(r.add(&r).unwrap(), half(2, 1, 2));
    assert_eq!(ExactScalar::one().add(&r), Err(ScalarError::NotClosed));
    let s = ScalarSum::from_int(1).add(&ScalarSum::from_scalar(&r));
    assert_eq!(s.len(), 2);
}

#[test]
fn radical_comparisons() {
    assert_eq!(half(2, -1, 2).cmp_exact(&ExactScalar::from_frac(1, 2)), Ordering::Greater);
    assert_eq!(half(2, -1, 4).cmp_exact(&half(2, -1, 2)), Ordering::Greater);
    let x = scalar("3^(1/3)");
    assert_eq!(x.cmp_exact(&x), Ordering::Equal);
}

#[test]
fn series_verdicts() {
    assert_eq!(classify_series(&term("(1/2)^t"), 1).unwrap(), SeriesVerdict::ConvergesTo(ScalarSum::from_int(1)));
    assert_eq!(classify_series(&term("t^(-2)").mul(&term("t")), 1).unwrap(), SeriesVerdict::Diverges);
    let cubic = term("t^(-3)").mul(&term("t"));
    assert!(matches!(classify_series(&cubic, 1).unwrap(), SeriesVerdict::ConvergesUnknownValue { .. }));
    for x1 in [10, 100, 1000] {
        let b = tail_bound(&cubic, x1).unwrap();
        assert!(b >= 1.0 / (x1 as f64 + 1.0) && b <= 1.0 / x1 as f64 * (1.0 + 1e-6), "{} {}", x1, b);
    }
}

#[test]
fn finite_sums() {
    assert_eq!(partial_sum(&term("(1/2)^t"), 1, 3).unwrap(), ScalarSum::from_scalar(&ExactScalar::from_frac(7, 8)));
    assert!(partial_sum(&term("t^5"), 1, 0).unwrap().is_zero());
    let roots = partial_sum(&term("(2^(-1/2))^t"), 1, 2).unwrap();
    assert_eq!(roots.len(), 2);
    assert!((roots.to_f64() - (0.5f64.sqrt() + 0.5)).abs() < 1e-15);
}

#[test]
fn term_extremes() {
    let ext = |s: &str| wbmult::series::extremes(&term(s), 1).unwrap();
    let e = ext("t^(-1)");
    assert_eq!((e.sup, e.inf), (Extreme::Exact(ScalarSum::from_int(1)), Extreme::Exact(ScalarSum::zero())));
    let e = ext("(1/2)^t");
    assert_eq!(e.sup, Extreme::Exact(ScalarSum::from_scalar(&ExactScalar::from_frac(1, 2))));
    let e = ext("t^2");
    assert_eq!((e.sup, e.inf), (Extreme::Infinite, Extreme::Exact(ScalarSum::from_int(1))));
}

#[test]
fn enumeration_listings() {
    let want: Vec<(f64, Option<i64>)> = [1, 2, 2, 3, 3, 3].iter().map(|&k| (1.0, Some(k))).collect();
    assert_eq!(spec(TRIANGLE).enumerate(3)[..6], want[..]);
    assert_eq!(spec(BASIS).enumerate(3), vec![(1.0, Some(1)), (1.0, Some(2)), (1.0, Some(3))]);
    assert_eq!(spec(DOUBLED_FIRST).enumerate(3), vec![(1.0, Some(1)), (1.0, Some(1)), (1.0, Some(2)), (1.0, Some(3))]);
}

#[test]
fn frame_profiles() {
    let at = |src: &str, k: i64| frame_profile(&spec(src), false).unwrap().value_at(k).unwrap();
    let exact = |n: i64, d: i64| Extreme::Exact(ScalarSum::from_scalar(&ExactScalar::from_frac(n, d)));
    for k in 1..=20 {
        assert_eq!(at(TRIANGLE, k), exact(k, 1));
        assert_eq!(at(EN_OVER_N, k), exact(1, k * k));
        assert_eq!(at(DOUBLED_FIRST, k), exact(if k == 1 { 2 } else { 1 }, 1));
    }
    let enumerated = spec(DOUBLED_FIRST).enumerate(1000);
    let s1: f64 = enumerated.iter().filter(|e| e.1 == Some(1)).map(|e| e.0 * e.0).sum();
    let s7: f64 = enumerated.iter().filter(|e| e.1 == Some(7)).map(|e| e.0 * e.0).sum();
    assert_eq!((s1, s7), (2.0, 1.0));
}

#[test]
fn sequence_classes() {
    let e = classify_sequence(&spec(BASIS)).unwrap();
    assert!(e.riesz && e.lower == e.upper && e.upper == Extreme::Exact(ScalarSum::from_int(1)));
    let d = classify_sequence(&spec(EN_OVER_N)).unwrap();
    assert!(d.bessel && !d.frame && d.nba && !d.nbb);
    assert_eq!(d.to_string(), "Bessel non-frame, NBA, non-NBB, B=1");
    let n = classify_sequence(&spec("seq phi\nblock t>=1 {\n  repeat 1: [ (w=t, idx=t) ]\n}\n")).unwrap();
    assert!(!n.bessel && n.nbb && !n.nba);
    let f = classify_sequence(&spec(DOUBLED_FIRST)).unwrap();
    assert!(f.frame && !f.riesz && !f.injective);
    assert_eq!((f.lower.to_f64(), f.upper.to_f64()), (1.0, 2.0));
}

#[test]
fn symbol_classes() {
    let sym = |w: &str| classify_symbol(&spec(&format!("seq m\nblock t>=1 {{\n  repeat 1: [ (w={}) ]\n}}\n", w))).unwrap();
    let one = sym("1");
    assert_eq!((one.kind, one.sup.to_f64(), one.inf.to_f64()), (SymbolKind::SemiNormalized, 1.0, 1.0));
    let inv = sym("t^(-1)");
    assert_eq!((inv.kind, inv.sup.to_f64(), inv.inf.to_f64()), (SymbolKind::BoundedNotSN, 1.0, 0.0));
    assert_eq!(sym("t").kind, SymbolKind::Unbounded);
}

fn symbol(w: &str, like: &SequenceSpec) -> SequenceSpec {
    wbmult::corpus::uniform_symbol(w, like).unwrap()
}

#[test]
fn basis_verdicts() {
    let e = spec(BASIS);
    let a = analyze(&symbol("1", &e), &e, &e, None).unwrap();
    assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::Yes, InvVerdict::Invertible, OperatorKind::Identity));
    assert!(a.certificates.iter().any(|c| c.rule == Rule::BesselBesselBounded));
    assert!(a.certificates.iter().any(|c| c.rule == Rule::Inv_Identity));
    let g = analyze(&symbol("t^(-1)", &e), &e, &e, None).unwrap();
    assert_eq!((g.inv, g.operator), (InvVerdict::NonInvertible, OperatorKind::G(1)));
    assert!(g.certificates.iter().any(|c| c.rule == Rule::NonInv_RangeGap));
    let g2 = analyze(&symbol("t^(-2)", &e), &e, &e, None).unwrap();
    assert_eq!(g2.operator, OperatorKind::G(2));
}

#[test]
fn rescaled_basis_is_identity_numerically() {
    let phi = spec("seq phi\nblock t>=1 {\n  repeat 1: [ (w=t, idx=t) ]\n}\n");
    let d = identity_deviation(&symbol("t^(-2)", &phi), &phi, &phi, 32, 10_000).unwrap();
    assert!(d.finite && d.deviation == 0.0);
}

#[test]
fn truncations() {
    let e = spec(BASIS);
    let t = truncate_matrix(&symbol("t^(-1)", &e), &e, &e, 3, 10_000).unwrap();
    assert_eq!(t.matrix, vec![1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0 / 3.0]);
    assert!(t.finite);
    for n in [16, 32] {
        let d = identity_deviation(&symbol("1", &e), &e, &e, n, 10_000).unwrap();
        assert_eq!(d.deviation, 0.0);
    }
    let tri = spec(TRIANGLE);
    let d = identity_deviation(&symbol("t^(-1)", &tri), &tri, &tri, 32, 10_000).unwrap();
    assert!(d.finite && d.deviation == 0.0);
}

#[test]
fn geometric_anchor_tails() {
    let phi = spec(GEOMETRIC_ANCHOR);
    let m = symbol("1", &phi);
    let a = analyze(&m, &phi, &phi, None).unwrap();
    assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::Yes, InvVerdict::Invertible, OperatorKind::Identity));
    let wide = identity_deviation(&m, &phi, &phi, 2, 10_000).unwrap();
    assert!(wide.passes() && wide.deviation == 0.0);
    let short = identity_deviation(&m, &phi, &phi, 8, 64).unwrap();
    assert!(short.passes() && short.deviation <= 2f64.powi(-60) && short.bound <= 1e-15, "{:?}", short);
}

#[test]
fn frame_bound_windows() {
    let bounds = |src: &str| frame_bounds_numeric(&spec(src), 16, 10_000).unwrap();
    assert_eq!(bounds(BASIS), (1.0, 1.0));
    let (lo, hi) = bounds(DOUBLED_FIRST);
    assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
    let (lo, hi) = bounds(EN_OVER_N);
    assert!((lo - 1.0 / 256.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-12);
}

#[test]
fn stress_on_basis_is_bounded() {
    let e = spec(BASIS);
    let f = parse_weight("t^(-1)").unwrap();
    let norm = (std::f64::consts::PI.powi(2) / 6.0).sqrt();
    for s in [StressStrategy::PositiveOnly, StressStrategy::AlternatingWorst] {
        let v = rearrangement_stress(&symbol("1", &e), &e, &e, &f, s, 100).unwrap();
        assert!(v <= norm, "{}", v);
    }
}

#[test]
fn stress_grows_without_bound() {
    let case = wbmult::corpus::load_case(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/table1/r1.a.case")).unwrap();
    let f = case.stress.as_ref().unwrap();
    for (t, want) in [(100, 10.0), (10_000, 100.0)] {
        let v = rearrangement_stress(&case.m, &case.phi, &case.psi, f, StressStrategy::PositiveOnly, t).unwrap();
        assert!((v - want).abs() < 1e-9 * want, "T={} gives {}", t, v);
    }
}
