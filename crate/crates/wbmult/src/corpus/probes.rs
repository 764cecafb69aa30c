use super::cases::{NormClass, SymbolColumn};
use crate::scalar::{ExactScalar, Exp};
use crate::sequence::{classify_sequence, classify_symbol, Entry, Group, Index, Kind, SequenceSpec};
use crate::series::TermExpr;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random multiplier `M_{m,phi,psi}` drawn inside one table cell.
#[derive(Clone, Debug)]
pub struct Probe {
    pub m: SequenceSpec,
    pub phi: SequenceSpec,
    pub psi: SequenceSpec,
}

const COEFFS: [(i64, i64); 8] = [(1, 1), (1, 1), (-1, 1), (2, 1), (1, 2), (-1, 2), (3, 1), (1, 3)];
/// Exponents of `t` for weights tending to zero with square-summable values.
const SUMMABLE: [(i64, i64); 4] = [(-1, 1), (-2, 1), (-3, 2), (-1, 1)];
/// Exponents of `t` for weights tending to zero with non-summable squares.
const SLOW: [(i64, i64); 2] = [(-1, 2), (-1, 4)];
const GROWING: [(i64, i64); 4] = [(1, 2), (1, 1), (2, 1), (1, 1)];

/// Prelude length and entries per block; every probe sequence has one group of repeat 1.
const LAYOUTS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 2)];

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("non-empty pool")
}

fn coeff(rng: &mut ChaCha8Rng) -> ExactScalar {
    if rng.random_bool(0.08) {
        return ExactScalar::prime_power(2, Exp::new(1, 2)).expect("root of two");
    }
    let (n, d) = pick(rng, &COEFFS);
    ExactScalar::from_frac(n, d)
}

fn t_pow(c: ExactScalar, (n, d): (i64, i64)) -> TermExpr {
    TermExpr::constant(c).mul(&TermExpr::affine_pow(1, 0, Exp::new(n, d)).expect("t is positive"))
}

fn geometric(c: ExactScalar, (n, d): (i64, i64)) -> TermExpr {
    TermExpr::constant(c).mul(&TermExpr::geometric(ExactScalar::from_frac(n, d)).expect("positive ratio"))
}

/// Growth profile of a weight.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Size {
    /// Bounded above and below.
    Steady,
    /// Tends to zero, square-summable.
    Summable,
    /// Tends to zero, not square-summable.
    Slow,
    Growing,
}

fn weight(rng: &mut ChaCha8Rng, size: Size) -> TermExpr {
    let c = coeff(rng);
    match size {
        Size::Steady => TermExpr::constant(c),
        Size::Summable if rng.random_bool(0.3) => geometric(c, pick(rng, &[(1, 2), (2, 3)])),
        Size::Summable => t_pow(c, pick(rng, &SUMMABLE)),
        Size::Slow => t_pow(c, pick(rng, &SLOW)),
        Size::Growing if rng.random_bool(0.15) => geometric(c, (2, 1)),
        Size::Growing => t_pow(c, pick(rng, &GROWING)),
    }
}

/// Where an entry points.
#[derive(Clone, Copy, Debug)]
enum Slot {
    /// The `s`-th of `b` basis slots of a block.
    Basis(usize),
    /// Repeats the index of basis slot `s`.
    Dup(usize),
    /// A fixed vector.
    Anchor(i64),
}

/// Index plan and weight sizes for one sequence of a probe cell.
struct Plan {
    slots: Vec<(Slot, Size)>,
    /// Basis lines are shifted by one, leaving `e_1` uncovered.
    shift: bool,
}

fn sizes_for_norm(rng: &mut ChaCha8Rng, norm: NormClass, n: usize, small: Size) -> Option<Vec<Size>> {
    let mut v = vec![Size::Steady; n];
    let i = rng.random_range(0..n);
    match norm {
        NormClass::Sn => {}
        NormClass::NbaNonNbb => v[i] = small,
        NormClass::NonNbaNbb => v[i] = Size::Growing,
        NormClass::NonNbaNonNbb => {
            if n < 2 {
                return None;
            }
            v[i] = Size::Growing;
            v[(i + rng.random_range(1..n)) % n] = small;
        }
    }
    Some(v)
}

/// A slot plan realising `kind` with norm class `norm` on `k` entries per block.
fn plan(rng: &mut ChaCha8Rng, kind: Kind, norm: NormClass, k: usize) -> Option<Plan> {
    match kind {
        Kind::RieszBasis => {
            if norm != NormClass::Sn {
                return None;
            }
            Some(Plan { slots: (0..k).map(|s| (Slot::Basis(s), Size::Steady)).collect(), shift: false })
        }
        Kind::OvercompleteFrame => {
            if k < 2 || !matches!(norm, NormClass::Sn | NormClass::NbaNonNbb) {
                return None;
            }
            let b = rng.random_range(1..k);
            let mut slots: Vec<(Slot, Size)> = (0..b).map(|s| (Slot::Basis(s), Size::Steady)).collect();
            for i in 0..k - b {
                let small = norm == NormClass::NbaNonNbb && (i == 0 || rng.random_bool(0.5));
                if small && rng.random_bool(0.5) {
                    slots.push((Slot::Anchor(rng.random_range(1..=2)), Size::Summable));
                } else {
                    let size = if small { pick(rng, &[Size::Summable, Size::Slow]) } else { Size::Steady };
                    slots.push((Slot::Dup(rng.random_range(0..b)), size));
                }
            }
            Some(Plan { slots, shift: false })
        }
        Kind::BesselNonFrame => {
            if !matches!(norm, NormClass::Sn | NormClass::NbaNonNbb) {
                return None;
            }
            let b = rng.random_range(1..=k);
            let mut sizes = vec![Size::Steady; b];
            let shift = norm == NormClass::Sn || rng.random_bool(0.3);
            if norm == NormClass::NbaNonNbb {
                let i = rng.random_range(0..b);
                sizes[i] = pick(rng, &[Size::Summable, Size::Slow]);
            }
            let mut slots: Vec<(Slot, Size)> = sizes.into_iter().enumerate().map(|(s, z)| (Slot::Basis(s), z)).collect();
            for _ in b..k {
                let s = rng.random_range(0..b);
                let size = slots[s].1;
                if norm == NormClass::NbaNonNbb && rng.random_bool(0.4) {
                    slots.push((Slot::Anchor(rng.random_range(2..=3)), Size::Summable));
                } else {
                    slots.push((Slot::Dup(s), size));
                }
            }
            Some(Plan { slots, shift })
        }
        Kind::NotBessel => {
            // one anchor with non-summable squares, the rest free within the norm class
            let anchor_size = match norm {
                NormClass::Sn | NormClass::NonNbaNbb => Size::Steady,
                NormClass::NbaNonNbb | NormClass::NonNbaNonNbb => {
                    if rng.random_bool(0.5) {
                        Size::Slow
                    } else {
                        Size::Steady
                    }
                }
            };
            if k < 2 {
                // a single growing basis slot is not Bessel
                if norm != NormClass::NonNbaNbb {
                    return None;
                }
                return Some(Plan { slots: vec![(Slot::Basis(0), Size::Growing)], shift: false });
            }
            let small = pick(rng, &[Size::Summable, Size::Slow]);
            let rest = sizes_for_norm(rng, norm, k - 1, small)?;
            let mut slots: Vec<(Slot, Size)> = rest.into_iter().enumerate().map(|(s, z)| (Slot::Basis(s), z)).collect();
            let at = rng.random_range(0..=slots.len());
            slots.insert(at, (Slot::Anchor(rng.random_range(1..=2)), anchor_size));
            // renumber basis slots in order of appearance
            let mut next = 0;
            for (slot, _) in slots.iter_mut() {
                if let Slot::Basis(s) = slot {
                    *s = next;
                    next += 1;
                }
            }
            Some(Plan { slots, shift: rng.random_bool(0.2) })
        }
    }
}

fn realise(rng: &mut ChaCha8Rng, plan: &Plan, pre: usize, name: &str) -> SequenceSpec {
    let b = plan.slots.iter().filter(|(s, _)| matches!(s, Slot::Basis(_))).count() as i64;
    let shift = plan.shift as i64;
    let mut offsets: Vec<i64> = (0..b).collect();
    if rng.random_bool(0.5) {
        offsets.shuffle(rng);
    }
    let line = |s: usize| Index::Line(b, pre as i64 + shift - b + 1 + offsets[s]);
    let entries = plan
        .slots
        .iter()
        .map(|&(slot, size)| Entry {
            weight: weight(rng, size),
            index: match slot {
                Slot::Basis(s) | Slot::Dup(s) => line(s),
                Slot::Anchor(c) => Index::Const(c),
            },
        })
        .collect();
    let prelude = (0..pre)
        .map(|i| Entry { weight: TermExpr::constant(coeff(rng)), index: Index::Const(i as i64 + 1 + shift) })
        .collect();
    SequenceSpec { name: name.into(), prelude, groups: vec![Group { repeat: (0, 1), entries }] }
}

fn sequence_in(rng: &mut ChaCha8Rng, layout: usize, kind: Kind, norm: NormClass, name: &str, tries: usize) -> Option<SequenceSpec> {
    let (pre, k) = LAYOUTS[layout];
    for _ in 0..tries {
        let p = match plan(rng, kind, norm, k) {
            Some(p) => p,
            None => continue,
        };
        let s = realise(rng, &p, pre, name);
        if s.validate().is_err() {
            continue;
        }
        if let Ok(c) = classify_sequence(&s) {
            if c.kind() == kind && NormClass::of(&c) == norm {
                return Some(s);
            }
        }
    }
    None
}

fn symbol_in(rng: &mut ChaCha8Rng, layout: usize, col: SymbolColumn, tries: usize) -> Option<SequenceSpec> {
    let (pre, k) = LAYOUTS[layout];
    for _ in 0..tries {
        let mut sizes = vec![Size::Steady; k];
        let i = rng.random_range(0..k);
        match col {
            SymbolColumn::Sn => {}
            SymbolColumn::Bounded => sizes[i] = pick(rng, &[Size::Summable, Size::Slow]),
            SymbolColumn::Unbounded => sizes[i] = Size::Growing,
        }
        for (j, s) in sizes.iter_mut().enumerate() {
            if j != i && col != SymbolColumn::Sn && rng.random_bool(0.25) {
                *s = pick(rng, &[Size::Summable, Size::Slow]);
            }
        }
        let entries = sizes.iter().map(|&z| Entry { weight: weight(rng, z), index: Index::Free }).collect();
        let prelude = (0..pre).map(|_| Entry { weight: TermExpr::constant(coeff(rng)), index: Index::Free }).collect();
        let s = SequenceSpec { name: "m".into(), prelude, groups: vec![Group { repeat: (0, 1), entries }] };
        if s.validate().is_err() {
            continue;
        }
        if let Ok(c) = classify_symbol(&s) {
            if SymbolColumn::of(c.kind) == col {
                return Some(s);
            }
        }
    }
    None
}

/// One probe with the requested classes, or `None` when the draws keep missing.
pub fn random_probe(
    rng: &mut ChaCha8Rng,
    kinds: (Kind, Kind),
    norms: (NormClass, NormClass),
    col: SymbolColumn,
) -> Option<Probe> {
    for _ in 0..40 {
        let layout = rng.random_range(0..LAYOUTS.len());
        let phi = match sequence_in(rng, layout, kinds.0, norms.0, "phi", 12) {
            Some(s) => s,
            None => continue,
        };
        let psi = match sequence_in(rng, layout, kinds.1, norms.1, "psi", 12) {
            Some(s) => s,
            None => continue,
        };
        if let Some(m) = symbol_in(rng, layout, col, 12) {
            return Some(Probe { m, phi, psi });
        }
    }
    None
}

/// Seeded stream of probes for one cell.
pub struct ProbeGenerator {
    rng: ChaCha8Rng,
    kinds: (Kind, Kind),
    norms: (NormClass, NormClass),
    col: SymbolColumn,
}

impl ProbeGenerator {
    pub fn new(seed: u64, kinds: (Kind, Kind), norms: (NormClass, NormClass), col: SymbolColumn) -> Self {
        ProbeGenerator { rng: ChaCha8Rng::seed_from_u64(seed), kinds, norms, col }
    }
}

impl Iterator for ProbeGenerator {
    type Item = Probe;
    fn next(&mut self) -> Option<Probe> {
        random_probe(&mut self.rng, self.kinds, self.norms, self.col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_respect_classes() {
        let g = ProbeGenerator::new(7, (Kind::RieszBasis, Kind::NotBessel), (NormClass::Sn, NormClass::NbaNonNbb), SymbolColumn::Bounded);
        let probes: Vec<Probe> = g.take(5).collect();
        assert_eq!(probes.len(), 5);
        for p in &probes {
            assert!(classify_sequence(&p.phi).unwrap().riesz);
            let c = classify_sequence(&p.psi).unwrap();
            assert!(!c.bessel && c.nba && !c.nbb);
            assert_eq!(classify_symbol(&p.m).unwrap().kind, crate::sequence::SymbolKind::BoundedNotSN);
            assert!(p.phi.is_aligned(&p.psi) && p.phi.is_aligned(&p.m));
        }
        let again: Vec<Probe> = ProbeGenerator::new(7, (Kind::RieszBasis, Kind::NotBessel), (NormClass::Sn, NormClass::NbaNonNbb), SymbolColumn::Bounded)
            .take(5)
            .collect();
        assert_eq!(probes[4].psi, again[4].psi);
    }
}
