use super::profile::{ext_max, ext_min, Profile, ProfileBuilder};
use super::{Index, SequenceSpec, SpecError};
use crate::scalar::ScalarSum;
use crate::series::{extremes, Extreme, TermSum};
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    NotBessel,
    BesselNonFrame,
    OvercompleteFrame,
    RieszBasis,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::NotBessel => "not Bessel",
            Kind::BesselNonFrame => "Bessel non-frame",
            Kind::OvercompleteFrame => "overcomplete frame",
            Kind::RieszBasis => "Riesz basis",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceClass {
    pub bessel: bool,
    pub frame: bool,
    pub riesz: bool,
    pub nbb: bool,
    pub nba: bool,
    pub norm_sn: bool,
    pub complete: bool,
    pub injective: bool,
    /// `sup_k S_k` with `S_k = sum over sigma(n) = k of |c_n|^2`.
    pub upper: Extreme,
    /// `inf_k S_k` over all `k`, zero when some index is never hit.
    pub lower: Extreme,
    pub norm_sup: Extreme,
    pub norm_inf: Extreme,
}

impl SequenceClass {
    pub fn kind(&self) -> Kind {
        if self.riesz {
            Kind::RieszBasis
        } else if self.frame {
            Kind::OvercompleteFrame
        } else if self.bessel {
            Kind::BesselNonFrame
        } else {
            Kind::NotBessel
        }
    }
}

impl fmt::Display for SequenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, {}, {}",
            self.kind(),
            if self.nba { "NBA" } else { "non-NBA" },
            if self.nbb { "NBB" } else { "non-NBB" }
        )?;
        if self.frame {
            write!(f, ", A={}", self.lower)?;
        }
        if self.bessel {
            write!(f, ", B={}", self.upper)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SymbolKind {
    SemiNormalized,
    BoundedNotSN,
    Unbounded,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::SemiNormalized => "SN",
            SymbolKind::BoundedNotSN => "bounded non-SN",
            SymbolKind::Unbounded => "unbounded",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolClass {
    pub kind: SymbolKind,
    pub sup: Extreme,
    pub inf: Extreme,
}

impl SymbolClass {
    pub fn bounded(&self) -> bool {
        self.kind != SymbolKind::Unbounded
    }

    pub fn sn(&self) -> bool {
        self.kind == SymbolKind::SemiNormalized
    }
}

impl fmt::Display for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, sup={}, inf={}", self.kind, self.sup, self.inf)
    }
}

/// Profile of `S_k`, or of the multiplicity `#{n : sigma(n) = k}` when `counting`.
pub fn frame_profile(spec: &SequenceSpec, counting: bool) -> Result<Profile, SpecError> {
    let mut b = ProfileBuilder::default();
    let one = ScalarSum::from_int(1);
    for e in &spec.prelude {
        let k = match e.index {
            Index::Const(k) => k,
            _ => return Err(SpecError::MissingIndex(spec.name.clone())),
        };
        let v = if counting { one.clone() } else { e.weight.pow_int(2)?.c };
        b.add_point(k, &v);
    }
    for s in spec.slots() {
        let w2 = if counting { s.count.clone() } else { s.count.mul(&s.weight.pow_int(2)?) };
        let f = TermSum::from(w2);
        match s.index {
            Index::Const(k) => b.add_series(k, f, s.t0),
            Index::Line(a, c) => b.add_line(a, c, s.t0, f),
            Index::Free => return Err(SpecError::MissingIndex(spec.name.clone())),
        }
    }
    Ok(b.finish()?)
}

/// Supremum and infimum of `|w_n|` over all entries.
pub fn norm_extremes(spec: &SequenceSpec) -> Result<(Extreme, Extreme, bool), SpecError> {
    let mut sup: Option<Extreme> = None;
    let mut inf: Option<Extreme> = None;
    let mut inf_positive = true;
    let mut push = |hi: Extreme, lo: Extreme, pos: bool| -> Result<(), SpecError> {
        sup = Some(match sup.take() {
            None => hi,
            Some(s) => ext_max(s, hi)?,
        });
        inf = Some(match inf.take() {
            None => lo,
            Some(i) => ext_min(i, lo)?,
        });
        inf_positive &= pos;
        Ok(())
    };
    for e in &spec.prelude {
        let v = Extreme::Exact(e.weight.abs()?.c);
        push(v.clone(), v, true)?;
    }
    for s in spec.slots() {
        let e = extremes(&TermSum::from(s.weight.abs()?), s.t0)?;
        push(e.sup, e.inf, e.inf_positive)?;
    }
    let zero = Extreme::Exact(ScalarSum::zero());
    Ok((sup.unwrap_or(zero.clone()), inf.unwrap_or(zero), inf_positive))
}

pub fn classify_sequence(spec: &SequenceSpec) -> Result<SequenceClass, SpecError> {
    let s = frame_profile(spec, false)?;
    let mult = frame_profile(spec, true)?;
    let (upper, lower, lower_positive) = s.extremes()?;
    let complete = mult.covers_all();
    let (mult_sup, _, _) = mult.extremes()?;
    let injective = mult_sup == Extreme::Exact(ScalarSum::from_int(1));
    let (norm_sup, norm_inf, norm_inf_positive) = norm_extremes(spec)?;
    let bessel = upper.is_finite();
    let frame = bessel && complete && lower_positive;
    let nba = norm_sup.is_finite();
    let nbb = norm_inf_positive;
    let norm_sn = nba && nbb;
    let riesz = injective && complete && norm_sn;
    let lower = if complete { lower } else { Extreme::Exact(ScalarSum::zero()) };
    Ok(SequenceClass { bessel, frame, riesz, nbb, nba, norm_sn, complete, injective, upper, lower, norm_sup, norm_inf })
}

pub fn classify_symbol(spec: &SequenceSpec) -> Result<SymbolClass, SpecError> {
    let (sup, inf, inf_positive) = norm_extremes(spec)?;
    let kind = if !sup.is_finite() {
        SymbolKind::Unbounded
    } else if inf_positive {
        SymbolKind::SemiNormalized
    } else {
        SymbolKind::BoundedNotSN
    };
    Ok(SymbolClass { kind, sup, inf })
}

/// `(min, max)` of `S_k` over `1 <= k <= kmax` as floating point numbers.
pub fn frame_window(spec: &SequenceSpec, kmax: i64) -> Result<(f64, f64), SpecError> {
    let p = frame_profile(spec, false)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 1..=kmax {
        let v = p.value_f64(k)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(src: &str) -> SequenceClass {
        classify_sequence(&SequenceSpec::parse(src).unwrap()).unwrap()
    }

    #[test]
    fn scaled_basis_is_bessel_non_frame() {
        let c = class("seq x\nblock t>=1 {\n repeat 1: [ (w=t^(-1), idx=t) ]\n}\n");
        assert!(c.bessel && !c.frame && c.nba && !c.nbb);
        assert_eq!(c.to_string(), "Bessel non-frame, NBA, non-NBB, B=1");
    }

    #[test]
    fn doubled_first_vector() {
        let c = class("seq x\nprelude [ (1, 1) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n}\n");
        assert!(c.frame && !c.riesz);
        assert_eq!(c.to_string(), "overcomplete frame, NBA, NBB, A=1, B=2");
    }

    #[test]
    fn orthonormal_basis() {
        let c = class("seq e\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n}\n");
        assert!(c.riesz && c.frame);
        let c = class("seq e\nblock t>=1 {\n repeat 1: [ (w=1, idx=2*t-1), (w=-2, idx=2*t) ]\n}\n");
        assert!(c.riesz);
        assert_eq!(c.upper, Extreme::Exact(ScalarSum::from_int(4)));
    }

    #[test]
    fn anchor_with_constant_weight_is_not_bessel() {
        let c = class("seq x\nblock t>=1 {\n repeat 1: [ (w=1, idx=1), (w=1, idx=t+1) ]\n}\n");
        assert!(!c.bessel && c.norm_sn);
        let c = class("seq x\nblock t>=1 {\n repeat 1: [ (w=(1/2)^t, idx=1), (w=1, idx=t+1) ]\n}\n");
        assert!(c.frame && !c.nbb && !c.riesz);
    }

    #[test]
    fn repeated_blocks() {
        // e_k repeated k times with weight 1/k: S_k = 1/k
        let c = class("seq x\nblock t>=1 {\n repeat t: [ (w=t^(-1), idx=t) ]\n}\n");
        assert!(c.bessel && !c.frame && !c.nbb);
        // e_k repeated k times with weight 1/sqrt(k): S_k = 1, overcomplete
        let c = class("seq x\nblock t>=1 {\n repeat t: [ (w=t^(-1/2), idx=t) ]\n}\n");
        assert!(c.frame && !c.riesz);
        assert_eq!(c.lower, Extreme::Exact(ScalarSum::from_int(1)));
    }

    #[test]
    fn symbols() {
        let m = SequenceSpec::parse("seq m\nblock t>=1 {\n repeat 1: [ (w=t^(-1)) ]\n}\n").unwrap();
        let c = classify_symbol(&m).unwrap();
        assert_eq!(c.kind, SymbolKind::BoundedNotSN);
        assert_eq!(c.sup, Extreme::Exact(ScalarSum::from_int(1)));
        let m = SequenceSpec::parse("seq m\nprelude [ (3) ]\nblock t>=1 {\n repeat 1: [ (w=t) ]\n}\n").unwrap();
        assert_eq!(classify_symbol(&m).unwrap().kind, SymbolKind::Unbounded);
    }
}
