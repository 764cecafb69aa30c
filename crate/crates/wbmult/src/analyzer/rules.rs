use super::aggregate::{abs_extremes, AggregateOperator, Coef};
use super::witness::{check_rescaling_witness, RescalingWitness};
use super::{Analysis, AnalyzerError, Certificate, InvVerdict, OperatorKind, Rule, UcVerdict};
use crate::sequence::{classify_sequence, classify_symbol, SequenceClass, SequenceSpec, SymbolClass};
use crate::scalar::ScalarSum;
use crate::series::classify_series;
use std::collections::BTreeMap;

/// Everything the rules look at, computed once per multiplier.
pub struct Context<'a> {
    pub m: &'a SequenceSpec,
    pub phi: &'a SequenceSpec,
    pub psi: &'a SequenceSpec,
    pub witness: Option<&'a RescalingWitness>,
    pub sym: SymbolClass,
    pub c_phi: SequenceClass,
    pub c_psi: SequenceClass,
    pub c_mphi: SequenceClass,
    pub c_mpsi: SequenceClass,
    pub agg: AggregateOperator,
}

impl<'a> Context<'a> {
    pub fn new(
        m: &'a SequenceSpec,
        phi: &'a SequenceSpec,
        psi: &'a SequenceSpec,
        witness: Option<&'a RescalingWitness>,
    ) -> Result<Self, AnalyzerError> {
        for s in [psi, m] {
            if !phi.is_aligned(s) {
                return Err(AnalyzerError::ShapeMismatch(format!("{} and {}", phi.name, s.name)));
            }
        }
        Ok(Context {
            m,
            phi,
            psi,
            witness,
            sym: classify_symbol(m)?,
            c_phi: classify_sequence(phi)?,
            c_psi: classify_sequence(psi)?,
            c_mphi: classify_sequence(&phi.scaled_by(m)?)?,
            c_mpsi: classify_sequence(&psi.scaled_by(m)?)?,
            agg: AggregateOperator::build(m, phi, psi)?,
        })
    }

    fn fact(&self, who: &str) -> String {
        match who {
            "Phi" => format!("Phi: {}", self.c_phi),
            "Psi" => format!("Psi: {}", self.c_psi),
            "mPhi" => format!("m*Phi: {}", self.c_mphi),
            "mPsi" => format!("m*Psi: {}", self.c_mpsi),
            _ => format!("m: {}", self.sym),
        }
    }
}

fn first_conflict(yes: &[Certificate], no: &[Certificate]) -> Option<String> {
    match (yes.first(), no.first()) {
        (Some(a), Some(b)) => Some(format!("{} vs {}", a, b)),
        _ => None,
    }
}

/// Unconditional convergence, tried rule by rule. Returns the verdict with every
/// certificate that fired, primary first.
pub fn decide_unconditional(cx: &Context) -> Result<(UcVerdict, Vec<Certificate>), AnalyzerError> {
    let mut nwd = Vec::new();
    let mut yes = Vec::new();
    let mut no = Vec::new();

    for (riesz, other, who, fwho, owho) in [
        (&cx.c_phi, &cx.c_mpsi, "Phi", "mPsi", "Psi"),
        (&cx.c_psi, &cx.c_mphi, "Psi", "mPhi", "Phi"),
    ] {
        if riesz.riesz && !other.bessel {
            let mut premises = vec![cx.fact(who), cx.fact(fwho)];
            let plain = if owho == "Psi" { &cx.c_psi } else { &cx.c_phi };
            if plain.nbb && !cx.sym.bounded() {
                premises.push(format!("(ii): {} NBB and m unbounded", owho));
            }
            nwd.push(Certificate::new(Rule::NotWellDefined_Riesz, premises));
        }
    }

    if cx.c_phi.bessel && cx.c_mpsi.bessel {
        yes.push(Certificate::new(Rule::BesselBesselBounded, vec![cx.fact("Phi"), cx.fact("mPsi"), "nu=(1)".into()]));
    } else if cx.c_mphi.bessel && cx.c_psi.bessel {
        yes.push(Certificate::new(Rule::BesselBesselBounded, vec![cx.fact("mPhi"), cx.fact("Psi"), "nu=(1)".into()]));
    }

    if let Some(w) = cx.witness {
        if !check_rescaling_witness(cx.m, cx.phi, cx.psi, w)? {
            return Err(AnalyzerError::InvalidWitness(format!("{} / {} / {}", w.nu.name, w.xi.name, w.theta.name)));
        }
        let (nu, xi, th) = (classify_symbol(&w.nu)?, classify_sequence(&w.xi)?, classify_sequence(&w.theta)?);
        if nu.bounded() && xi.bessel && th.bessel {
            yes.push(Certificate::new(
                Rule::RescalingWitness,
                vec![
                    format!("nu {}: {}", w.nu.name, nu),
                    format!("Xi {}: {}", w.xi.name, xi),
                    format!("Theta {}: {}", w.theta.name, th),
                ],
            ));
        }
    }

    match cx.agg.absolute_bound()? {
        Ok(facts) => yes.push(Certificate::new(Rule::PatternBounded, facts)),
        Err(_) => {}
    }

    for (nbb, bes, a, b) in [
        (cx.c_phi.nbb, cx.c_mpsi.bessel, "Phi", "mPsi"),
        (cx.c_mphi.nbb, cx.c_psi.bessel, "mPhi", "Psi"),
        (cx.c_psi.nbb, cx.c_mphi.bessel, "Psi", "mPhi"),
        (cx.c_mpsi.nbb, cx.c_phi.bessel, "mPsi", "Phi"),
    ] {
        if nbb && !bes {
            no.push(Certificate::new(Rule::NotUC_NBB_NotBessel, vec![format!("{} NBB", a), cx.fact(b)]));
            break;
        }
    }
    if cx.c_phi.nbb && cx.c_psi.nbb && !cx.sym.bounded() {
        no.push(Certificate::new(Rule::NotUC_BothNBB_Unbounded, vec!["Phi NBB".into(), "Psi NBB".into(), cx.fact("m")]));
    }

    let mut against = nwd.clone();
    against.extend(no.iter().cloned());
    if let Some(c) = first_conflict(&yes, &against) {
        return Err(AnalyzerError::Inconsistent(c));
    }
    let verdict = if !nwd.is_empty() {
        UcVerdict::NotWellDefined
    } else if !yes.is_empty() {
        UcVerdict::Yes
    } else if !no.is_empty() {
        UcVerdict::No
    } else {
        UcVerdict::Unknown
    };
    let mut certs = nwd;
    certs.extend(yes);
    certs.extend(no);
    Ok((verdict, certs))
}

type ExactLine = BTreeMap<i64, ScalarSum>;

fn exact_line(line: Option<BTreeMap<i64, Coef>>) -> Option<ExactLine> {
    let mut out = BTreeMap::new();
    for (k, c) in line? {
        match c {
            Coef::Exact(v) => {
                out.insert(k, v);
            }
            _ => return None,
        }
    }
    Some(out)
}

/// Two non-zero lines `a`, `b` and scalars `xa`, `xb` with `xb * a = xa * b`.
fn proportional_pair(lines: &[(i64, ExactLine)]) -> Option<(i64, i64, ScalarSum, ScalarSum)> {
    for (i, (ja, ca)) in lines.iter().enumerate() {
        for (jb, cb) in &lines[i + 1..] {
            if ca.is_empty() || ca.len() != cb.len() || !ca.keys().eq(cb.keys()) {
                continue;
            }
            let k0 = *ca.keys().next().expect("non-empty");
            let (xa, xb) = (&ca[&k0], &cb[&k0]);
            if ca.iter().all(|(k, v)| v.mul(xb) == cb[k].mul(xa)) {
                return Some((*ja, *jb, xa.clone(), xb.clone()));
            }
        }
    }
    None
}

fn not_injective(agg: &AggregateOperator) -> Result<Option<Certificate>, AnalyzerError> {
    let mut cols = Vec::new();
    for j in 1..=agg.scan_limit() {
        if let Some(c) = exact_line(agg.column(j)?) {
            if c.is_empty() {
                return Ok(Some(
                    Certificate::new(Rule::NonInv_NotInjective, vec![format!("column {} vanishes", j)])
                        .with_witness(format!("M e_{} = 0", j)),
                ));
            }
            cols.push((j, c));
        }
    }
    if !agg.has_slanted() {
        let vstart = agg.class_start();
        for rho in 1..=agg.period {
            if agg.column_class(rho)?.is_empty() {
                let j = agg.period * vstart + rho;
                return Ok(Some(
                    Certificate::new(
                        Rule::NonInv_NotInjective,
                        vec![format!("columns j = {}v+{} vanish for j > {}", agg.period, rho, agg.core())],
                    )
                    .with_witness(format!("M e_{} = 0", j)),
                ));
            }
        }
    }
    if let Some((ja, jb, xa, xb)) = proportional_pair(&cols) {
        // M(xb e_ja) = M(xa e_jb)
        let w = if xa == xb {
            format!("M e_{} = M e_{}", ja, jb)
        } else {
            format!("M(({}) e_{}) = M(({}) e_{})", xb, ja, xa, jb)
        };
        return Ok(Some(
            Certificate::new(Rule::NonInv_NotInjective, vec![format!("columns {} and {} are proportional", ja, jb)])
                .with_witness(w),
        ));
    }
    Ok(None)
}

fn range_gap(agg: &AggregateOperator) -> Result<Option<Certificate>, AnalyzerError> {
    let mut rows = Vec::new();
    for k in 1..=agg.scan_limit() {
        if agg.row_is_zero(k)? {
            return Ok(Some(
                Certificate::new(Rule::NonInv_RangeGap, vec![format!("row {} vanishes", k)])
                    .with_witness(format!("e_{} is orthogonal to the range", k)),
            ));
        }
        if let Some(r) = exact_line(agg.row(k)?) {
            rows.push((k, r));
        }
    }
    if let Some((ka, kb, xa, xb)) = proportional_pair(&rows) {
        // xb * row ka = xa * row kb
        return Ok(Some(
            Certificate::new(Rule::NonInv_RangeGap, vec![format!("rows {} and {} are proportional", ka, kb)])
                .with_witness(format!("({}) e_{} - ({}) e_{} is orthogonal to the range", xb, ka, xa, kb)),
        ));
    }
    if agg.has_slanted() {
        return Ok(None);
    }
    for rho in 1..=agg.period {
        if agg.row_class(rho).is_empty() {
            let k = agg.period * agg.class_start() + rho;
            return Ok(Some(
                Certificate::new(Rule::NonInv_RangeGap, vec![format!("rows k = {}v+{} vanish", agg.period, rho)])
                    .with_witness(format!("e_{} is orthogonal to the range", k)),
            ));
        }
    }
    let vstart = agg.class_start();
    for rho in 1..=agg.period {
        let entries = agg.column_class(rho)?;
        if entries.is_empty() {
            continue;
        }
        let mut all = true;
        for (_, g) in &entries {
            if !g.tends_to_zero()? {
                all = false;
                break;
            }
        }
        if !all {
            continue;
        }
        let mut premises = vec![format!("||M e_j|| -> 0 along j = {}v+{}", agg.period, rho)];
        let mut witness = format!("M is not bounded below on e_j, j = {}v+{}", agg.period, rho);
        if agg.is_diagonal()? {
            let (_, cls) = agg.diagonal()?;
            let g = &cls[(rho - 1) as usize];
            if classify_series(&g.mul(g), vstart)?.converges() {
                witness = "sum_k A_kk e_k does not belong to the range".into();
                premises.push("diagonal with square-summable entries".into());
            }
        }
        return Ok(Some(Certificate::new(Rule::NonInv_RangeGap, premises).with_witness(witness)));
    }
    Ok(None)
}

fn diagonal_sn(agg: &AggregateOperator) -> Result<Option<Certificate>, AnalyzerError> {
    if !agg.is_diagonal()? {
        return Ok(None);
    }
    let (head, cls) = agg.diagonal()?;
    if !head.iter().all(Coef::is_nonzero) {
        return Ok(None);
    }
    let mut hi = 0f64;
    for c in &head {
        hi = hi.max(c.to_f64().abs());
    }
    let mut facts = vec![format!("{} leading diagonal entries nonzero", head.len())];
    for (r, g) in cls.iter().enumerate() {
        let e = match abs_extremes(g, agg.v_start)? {
            Some(e) => e,
            None => return Ok(None),
        };
        if !e.sup.is_finite() || !e.inf_positive {
            return Ok(None);
        }
        facts.push(format!("residue {}: {} <= |A_kk| <= {}", r + 1, e.inf, e.sup));
    }
    Ok(Some(Certificate::new(Rule::Inv_DiagonalSN, facts)))
}

pub fn decide_invertibility(cx: &Context, uc: UcVerdict) -> Result<(InvVerdict, Vec<Certificate>, OperatorKind), AnalyzerError> {
    let agg = &cx.agg;
    let kind = if agg.is_identity()? {
        OperatorKind::Identity
    } else if let Some(p) = agg.g_power()? {
        OperatorKind::G(p)
    } else {
        OperatorKind::Other
    };
    if uc == UcVerdict::NotWellDefined {
        return Ok((InvVerdict::NotApplicable, Vec::new(), kind));
    }
    let mut yes = Vec::new();
    let mut no = Vec::new();
    if kind == OperatorKind::Identity {
        yes.push(Certificate::new(Rule::Inv_Identity, vec!["signed aggregates equal the identity".into()]));
    }
    let (p, q) = (&cx.c_phi, &cx.c_psi);
    if p.riesz && q.riesz && cx.sym.sn() {
        yes.push(Certificate::new(Rule::Inv_TwoRieszSN, vec![cx.fact("Phi"), cx.fact("Psi"), cx.fact("m")]));
    }
    if cx.sym.sn() {
        if p.riesz && q.frame && !q.riesz {
            no.push(Certificate::new(
                Rule::NonInv_RieszVsOvercomplete,
                vec![cx.fact("Phi"), cx.fact("Psi"), cx.fact("m"), "injective, not surjective".into()],
            ));
        } else if q.riesz && p.frame && !p.riesz {
            no.push(Certificate::new(
                Rule::NonInv_RieszVsOvercomplete,
                vec![cx.fact("Psi"), cx.fact("Phi"), cx.fact("m"), "surjective, not injective".into()],
            ));
        }
    }
    for (riesz, folded, a, b) in [(p, &cx.c_mpsi, "Phi", "mPsi"), (q, &cx.c_mphi, "Psi", "mPhi")] {
        if riesz.riesz {
            if folded.riesz {
                yes.push(Certificate::new(Rule::Inv_RieszCriterion, vec![cx.fact(a), cx.fact(b)]));
            } else {
                no.push(Certificate::new(Rule::NonInv_RieszCriterion, vec![cx.fact(a), cx.fact(b)]));
            }
            break;
        }
    }
    if kind != OperatorKind::Identity {
        if let Some(c) = diagonal_sn(agg)? {
            yes.push(c);
        }
    }
    if let Some(c) = not_injective(agg)? {
        no.push(c);
    }
    if let Some(c) = range_gap(agg)? {
        no.push(c);
    }
    for (a, b, an, bn) in [(&cx.c_phi, &cx.c_mpsi, "Phi", "mPsi"), (&cx.c_mphi, &cx.c_psi, "mPhi", "Psi")] {
        if a.bessel && b.bessel && !(a.frame && b.frame) {
            no.push(Certificate::new(Rule::NonInv_BesselNonFrame, vec![cx.fact(an), cx.fact(bn), "symbol (1) bounded".into()]));
            break;
        }
    }
    if let Some(c) = first_conflict(&yes, &no) {
        return Err(AnalyzerError::Inconsistent(c));
    }
    let verdict = if !yes.is_empty() {
        InvVerdict::Invertible
    } else if !no.is_empty() {
        InvVerdict::NonInvertible
    } else {
        InvVerdict::Unknown
    };
    let mut certs = yes;
    certs.extend(no);
    Ok((verdict, certs, kind))
}

/// Full analysis of `M_{m,phi,psi}`.
pub fn analyze(
    m: &SequenceSpec,
    phi: &SequenceSpec,
    psi: &SequenceSpec,
    witness: Option<&RescalingWitness>,
) -> Result<Analysis, AnalyzerError> {
    let cx = Context::new(m, phi, psi, witness)?;
    let (uc, mut certificates) = decide_unconditional(&cx)?;
    let (inv, inv_certs, operator) = decide_invertibility(&cx, uc)?;
    certificates.extend(inv_certs);
    Ok(Analysis { uc, inv, operator, pattern: cx.agg.pattern(), certificates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> SequenceSpec {
        SequenceSpec::parse(s).unwrap()
    }

    fn basis() -> SequenceSpec {
        spec("seq e\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n}\n")
    }

    fn symbol(w: &str) -> SequenceSpec {
        spec(&format!("seq m\nblock t>=1 {{\n repeat 1: [ (w={}) ]\n}}\n", w))
    }

    #[test]
    fn identity_on_basis() {
        let a = analyze(&symbol("1"), &basis(), &basis(), None).unwrap();
        assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::Yes, InvVerdict::Invertible, OperatorKind::Identity));
        assert_eq!(a.certificates[0].rule, Rule::BesselBesselBounded);
        assert_eq!(a.certificates.iter().find(|c| c.rule.to_string().starts_with("Inv")).unwrap().rule, Rule::Inv_Identity);
    }

    #[test]
    fn g_one_has_range_gap() {
        let a = analyze(&symbol("t^(-1)"), &basis(), &basis(), None).unwrap();
        assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::Yes, InvVerdict::NonInvertible, OperatorKind::G(1)));
        assert!(a.certificates.iter().any(|c| c.rule == Rule::NonInv_RangeGap));
    }

    #[test]
    fn conditional_identity() {
        // block t carries e_t once, then t-1 pairs (e_t, +-e_t)
        let phi = spec("seq p\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n repeat t-1: [ (w=1, idx=t), (w=1, idx=t) ]\n}\n");
        let psi = spec("seq q\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n repeat t-1: [ (w=1, idx=t), (w=-1, idx=t) ]\n}\n");
        let m = spec("seq m\nblock t>=1 {\n repeat 1: [ (w=1) ]\n repeat t-1: [ (w=1), (w=1) ]\n}\n");
        let a = analyze(&m, &phi, &psi, None).unwrap();
        assert_eq!((a.uc, a.inv, a.operator), (UcVerdict::No, InvVerdict::Invertible, OperatorKind::Identity));
        assert_eq!(a.certificates[0].rule, Rule::NotUC_NBB_NotBessel);
    }

    #[test]
    fn riesz_against_non_bessel() {
        let psi = spec("seq q\nblock t>=1 {\n repeat 1: [ (w=1, idx=1), (w=1, idx=t+1) ]\n}\n");
        let a = analyze(&symbol("1"), &basis(), &psi, None);
        assert!(matches!(a, Err(AnalyzerError::ShapeMismatch(_))), "{:?}", a);
        let phi = spec("seq p\nprelude [ (1, 1) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=2*t), (w=1, idx=2*t+1) ]\n}\n");
        let psi = spec("seq q\nprelude [ (1, 1) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=1), (w=1, idx=t+1) ]\n}\n");
        let m = spec("seq m\nprelude [ (1) ]\nblock t>=1 {\n repeat 1: [ (w=1), (w=1) ]\n}\n");
        let a = analyze(&m, &phi, &psi, None).unwrap();
        assert_eq!(a.uc, UcVerdict::NotWellDefined);
        assert_eq!(a.inv, InvVerdict::NotApplicable);
    }

    #[test]
    fn collision_witness() {
        let phi = spec("seq p\nprelude [ (1, 1), (1, 2) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t+2) ]\n}\n");
        let psi = spec("seq q\nprelude [ (1, 1), (1, 2) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t+2) ]\n}\n");
        let m = spec("seq m\nprelude [ (1), (1) ]\nblock t>=1 {\n repeat 1: [ (w=1) ]\n}\n");
        let a = analyze(&m, &phi, &psi, None).unwrap();
        assert_eq!(a.operator, OperatorKind::Identity);
        let phi2 = spec("seq p\nprelude [ (1, 1), (1, 2), (1, 2) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t+2) ]\n}\n");
        let psi2 = spec("seq q\nprelude [ (1, 1), (1, 2), (1, 3) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t+3) ]\n}\n");
        let m2 = spec("seq m\nprelude [ (1), (1), (1) ]\nblock t>=1 {\n repeat 1: [ (w=1) ]\n}\n");
        let a = analyze(&m2, &phi2, &psi2, None).unwrap();
        let c = a.certificates.iter().find(|c| c.rule == Rule::NonInv_NotInjective).unwrap();
        assert_eq!(c.witness.as_deref(), Some("M e_2 = M e_3"));
    }
}
