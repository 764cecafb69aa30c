//! Coefficient aggregates of a multiplier on the basis `(e_k)`.
//!
//! Entry `(k, j)` collects `m_n c_n d_n` over all `n` with `sigma(n) = k` and
//! `tau(n) = j`. Entries come in finitely many points plus families along
//! arithmetic progressions: anchor rows, anchor columns and bands `k - j = delta`.

use super::AnalyzerError;
use crate::scalar::{ExactScalar, ScalarSum};
use crate::sequence::{split_line, Index, PointValue, SequenceSpec};
use crate::series::{extremes, Extreme, Extremes, Result as SResult, TermExpr, TermSum};
use num::integer::lcm;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Value of a single aggregate entry.
#[derive(Clone, Debug, PartialEq)]
pub enum Coef {
    Exact(ScalarSum),
    Approx(f64),
    Divergent,
}

impl Coef {
    pub fn of(p: &PointValue) -> SResult<Coef> {
        Ok(match p.value()? {
            Extreme::Exact(v) => Coef::Exact(v),
            Extreme::Approx(v) => Coef::Approx(v),
            Extreme::Infinite => Coef::Divergent,
        })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Coef::Exact(v) if v.is_zero())
    }

    pub fn is_exact(&self, x: &ScalarSum) -> bool {
        matches!(self, Coef::Exact(v) if v == x)
    }

    /// Nonzero for certain (exact nonzero, or a numerically clear estimate).
    pub fn is_nonzero(&self) -> bool {
        match self {
            Coef::Exact(v) => !v.is_zero(),
            Coef::Approx(v) => v.abs() > 1e-9,
            Coef::Divergent => false,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coef::Exact(v) => v.to_f64(),
            Coef::Approx(v) => *v,
            Coef::Divergent => f64::NAN,
        }
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Exact(v) => write!(f, "{}", v),
            Coef::Approx(v) => write!(f, "~{}", v),
            Coef::Divergent => write!(f, "divergent"),
        }
    }
}

/// An infinite family of entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    /// Row `k`, moving column.
    Row(i64),
    /// Column `j`, moving row.
    Col(i64),
    /// Entries `(k, k - delta)`, moving row.
    Band(i64),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Row(k) => write!(f, "anchor row {}", k),
            Family::Col(j) => write!(f, "anchor column {}", j),
            Family::Band(0) => write!(f, "diagonal"),
            Family::Band(d) => write!(f, "band k-j={}", d),
        }
    }
}

/// Support shape of the absolute aggregate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Pattern {
    Diagonal,
    DiagonalPlusAnchorRow(i64),
    DiagonalPlusAnchorColumn(i64),
    DiagonalPlusAnchorRowAndColumn,
    Other,
}

/// Entries along lines of different slopes, kept unreduced.
#[derive(Clone, Debug, PartialEq)]
pub struct Slanted {
    pub row: Index,
    pub col: Index,
    pub t0: i64,
    pub value: TermExpr,
}

#[derive(Clone, Debug)]
pub struct AggregateOperator {
    pub period: i64,
    /// Families are held symbolically for `v >= v_start`.
    pub v_start: i64,
    /// Largest band offset in absolute value.
    pub reach: i64,
    pub points: BTreeMap<(i64, i64), PointValue>,
    pub abs_points: BTreeMap<(i64, i64), PointValue>,
    /// Per family, one function of `v` per residue `rho`, placed at moving index `period * v + rho`.
    pub families: BTreeMap<Family, Vec<TermSum>>,
    pub abs_families: BTreeMap<Family, Vec<TermSum>>,
    pub slanted: Vec<Slanted>,
}

struct Line {
    fam: Family,
    a: i64,
    b: i64,
    t0: i64,
    f: TermSum,
    /// `f` with the repeat count multiplied out, so that it can cancel against the weights.
    fx: TermSum,
    abs: TermSum,
}

/// `(a t + b) w` as `a t w + b w`.
fn expand_count((a, b): (i64, i64), w: &TermExpr) -> SResult<TermSum> {
    let mut out = TermSum::zero();
    if a != 0 {
        let t = TermExpr::affine_pow(1, 0, crate::scalar::Exp::from_integer(1))?;
        out.add_term(&t.mul(w).scale(&ExactScalar::from_int(a)));
    }
    if b != 0 {
        out.add_term(&w.scale(&ExactScalar::from_int(b)));
    }
    Ok(out)
}

/// The block `t >= t0` at which a line index reaches `n`.
fn hit_time(ix: &Index, t0: i64, n: i64) -> Option<i64> {
    match *ix {
        Index::Line(a, b) if (n - b) % a == 0 && (n - b) / a >= t0 => Some((n - b) / a),
        _ => None,
    }
}

impl AggregateOperator {
    /// Aggregates of `M_{m,phi,psi}`: rows follow `phi`, columns follow `psi`.
    pub fn build(m: &SequenceSpec, phi: &SequenceSpec, psi: &SequenceSpec) -> Result<Self, AnalyzerError> {
        if !phi.is_aligned(psi) || !phi.is_aligned(m) {
            return Err(AnalyzerError::ShapeMismatch(format!("{}, {}, {}", m.name, phi.name, psi.name)));
        }
        for s in [phi, psi] {
            if !s.has_indices() {
                return Err(AnalyzerError::Spec(crate::sequence::SpecError::MissingIndex(s.name.clone())));
            }
        }
        let mut points: BTreeMap<(i64, i64), PointValue> = BTreeMap::new();
        let mut abs_points: BTreeMap<(i64, i64), PointValue> = BTreeMap::new();
        let mut lines = Vec::new();
        let mut slanted = Vec::new();
        let mut c0 = 0i64;
        for ((mu, c), d) in m.prelude.iter().zip(&phi.prelude).zip(&psi.prelude) {
            let (k, j) = match (c.index, d.index) {
                (Index::Const(k), Index::Const(j)) => (k, j),
                _ => return Err(AnalyzerError::ShapeMismatch("prelude entries need constant indices".into())),
            };
            let w = mu.weight.mul(&c.weight).mul(&d.weight);
            if !w.shape.is_constant() {
                return Err(AnalyzerError::ShapeMismatch("prelude weights must be constants".into()));
            }
            let p = points.entry((k, j)).or_default();
            p.finite = p.finite.add(&w.c);
            let q = abs_points.entry((k, j)).or_default();
            q.finite = q.finite.add(&w.abs()?.c);
            c0 = c0.max(k).max(j);
        }
        for ((ms, ps), qs) in m.slots().into_iter().zip(phi.slots()).zip(psi.slots()) {
            let w = ms.weight.mul(&ps.weight).mul(&qs.weight);
            let a = ps.count.mul(&w);
            let fx = expand_count(phi.groups[ps.group].repeat, &w)?;
            let abs = a.abs()?;
            let t0 = ps.t0;
            match (ps.index, qs.index) {
                (Index::Const(k), Index::Const(j)) => {
                    points.entry((k, j)).or_default().series.push((TermSum::from(a), t0));
                    abs_points.entry((k, j)).or_default().series.push((TermSum::from(abs), t0));
                    c0 = c0.max(k).max(j);
                }
                (Index::Line(a1, b1), Index::Const(j)) => {
                    c0 = c0.max(j);
                    lines.push(Line { fam: Family::Col(j), a: a1, b: b1, t0, f: a.into(), fx: fx.clone(), abs: abs.into() });
                }
                (Index::Const(k), Index::Line(a2, b2)) => {
                    c0 = c0.max(k);
                    lines.push(Line { fam: Family::Row(k), a: a2, b: b2, t0, f: a.into(), fx: fx.clone(), abs: abs.into() });
                }
                (Index::Line(a1, b1), Index::Line(a2, b2)) if a1 == a2 => {
                    lines.push(Line { fam: Family::Band(b1 - b2), a: a1, b: b1, t0, f: a.into(), fx: fx.clone(), abs: abs.into() });
                }
                (row, col) => slanted.push(Slanted { row, col, t0, value: a }),
            }
        }
        let period = lines.iter().fold(1i64, |p, l| lcm(p, l.a));
        let reach = lines
            .iter()
            .filter_map(|l| match l.fam {
                Family::Band(d) => Some(d.abs()),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let mut subs = Vec::new();
        for l in &lines {
            let signed = split_line(l.a, l.b, l.t0, &l.f, period)?;
            let expanded = split_line(l.a, l.b, l.t0, &l.fx, period)?;
            let abs = split_line(l.a, l.b, l.t0, &l.abs, period)?;
            for (((rho, v0, g), (_, _, gx)), (_, _, h)) in signed.into_iter().zip(expanded).zip(abs) {
                subs.push((l.fam, rho, v0, (g, gx), h));
            }
        }
        let mut v_start = ((c0 + reach + period - 1).div_euclid(period)).max(1);
        for (_, _, v0, (g, _), _) in &subs {
            v_start = v_start.max(*v0).max(g.positive_from());
        }
        let mut families: BTreeMap<Family, Vec<TermSum>> = BTreeMap::new();
        let mut abs_families: BTreeMap<Family, Vec<TermSum>> = BTreeMap::new();
        let mut expanded: BTreeMap<Family, Vec<TermSum>> = BTreeMap::new();
        for (fam, rho, v0, (g, gx), h) in subs {
            let cls = expanded.entry(fam).or_insert_with(|| vec![TermSum::zero(); period as usize]);
            cls[(rho - 1) as usize] = cls[(rho - 1) as usize].add(&gx);
            for v in v0..v_start {
                let pos = position(fam, period * v + rho);
                let p = points.entry(pos).or_default();
                p.finite = p.finite.add(&g.eval(v)?);
                let q = abs_points.entry(pos).or_default();
                q.finite = q.finite.add(&h.eval(v)?);
            }
            let cls = families.entry(fam).or_insert_with(|| vec![TermSum::zero(); period as usize]);
            cls[(rho - 1) as usize] = cls[(rho - 1) as usize].add(&g);
            let cls = abs_families.entry(fam).or_insert_with(|| vec![TermSum::zero(); period as usize]);
            cls[(rho - 1) as usize] = cls[(rho - 1) as usize].add(&h);
        }
        for (fam, cls) in families.iter_mut() {
            for (g, gx) in cls.iter_mut().zip(&expanded[fam]) {
                if gx.len() < g.len() {
                    *g = gx.clone();
                }
            }
        }
        Ok(AggregateOperator { period, v_start, reach, points, abs_points, families, abs_families, slanted })
    }

    /// Last index held in the mixed region; rows and columns beyond it carry
    /// only family entries.
    pub fn core(&self) -> i64 {
        self.period * self.v_start + self.reach
    }

    fn threshold(&self) -> i64 {
        self.period * self.v_start
    }

    fn split(&self, k: i64) -> (usize, i64) {
        let rho = (k - 1).rem_euclid(self.period) + 1;
        ((rho - 1) as usize, (k - rho) / self.period)
    }

    /// First `v` at which every index `period * v + rho` exceeds `core()`.
    pub fn class_start(&self) -> i64 {
        self.core() / self.period + 1
    }

    /// Signed entry at `(k, j)`.
    pub fn entry(&self, k: i64, j: i64) -> SResult<Coef> {
        if let Some(p) = self.points.get(&(k, j)) {
            return Coef::of(p);
        }
        let th = self.threshold();
        let mut acc = ScalarSum::zero();
        for (fam, cls) in &self.families {
            let moving = match *fam {
                Family::Row(r) if r == k && j > th => j,
                Family::Col(c) if c == j && k > th => k,
                Family::Band(d) if k - j == d && k > th => k,
                _ => continue,
            };
            let (c, v) = self.split(moving);
            acc = acc.add(&cls[c].eval(v)?);
        }
        Ok(Coef::Exact(acc))
    }

    pub fn has_slanted(&self) -> bool {
        !self.slanted.is_empty()
    }


    fn live(&self) -> impl Iterator<Item = (&Family, &Vec<TermSum>)> {
        self.families.iter().filter(|(_, c)| c.iter().any(|g| !g.is_zero()))
    }

    /// Indices worth scanning one by one: the core plus the first slanted entries.
    pub fn scan_limit(&self) -> i64 {
        let mut n = self.core();
        for sl in &self.slanted {
            for ix in [&sl.row, &sl.col] {
                n = n.max(ix.at(sl.t0 + 1).unwrap_or(0));
            }
        }
        n
    }

    /// Entries of row `k`, or `None` when the row is an infinite anchor row.
    pub fn row(&self, k: i64) -> SResult<Option<BTreeMap<i64, Coef>>> {
        if self.live().any(|(f, _)| *f == Family::Row(k)) {
            return Ok(None);
        }
        let th = self.threshold();
        let mut out = BTreeMap::new();
        for (&(_, j), p) in self.points.range((k, i64::MIN)..=(k, i64::MAX)) {
            out.insert(j, Coef::of(p)?);
        }
        for (fam, cls) in self.live() {
            let col = match *fam {
                Family::Band(d) if k > th => k - d,
                Family::Col(c) if k > th => c,
                _ => continue,
            };
            let (c, v) = self.split(k);
            let val = cls[c].eval(v)?;
            if !val.is_zero() {
                out.insert(col, Coef::Exact(val));
            }
        }
        for sl in &self.slanted {
            if let Some(t) = hit_time(&sl.row, sl.t0, k) {
                let col = sl.col.at(t).expect("slanted columns are lines");
                let val = sl.value.eval(t)?;
                let cur = match out.remove(&col) {
                    None => Coef::Exact(val),
                    Some(Coef::Exact(x)) => Coef::Exact(x.add(&val)),
                    Some(other) => other,
                };
                out.insert(col, cur);
            }
        }
        out.retain(|_, c| !c.is_exact_zero());
        Ok(Some(out))
    }

    /// Entries of column `j`, or `None` when the column is an infinite anchor column.
    pub fn column(&self, j: i64) -> SResult<Option<BTreeMap<i64, Coef>>> {
        if self.live().any(|(f, _)| *f == Family::Col(j)) {
            return Ok(None);
        }
        let th = self.threshold();
        let mut out = BTreeMap::new();
        for (&(k, jj), p) in &self.points {
            if jj == j {
                out.insert(k, Coef::of(p)?);
            }
        }
        for (fam, cls) in self.live() {
            let (row, moving) = match *fam {
                Family::Band(d) if j + d > th => (j + d, j + d),
                Family::Row(r) if j > th => (r, j),
                _ => continue,
            };
            let (c, v) = self.split(moving);
            let val = cls[c].eval(v)?;
            if !val.is_zero() {
                out.insert(row, Coef::Exact(val));
            }
        }
        for sl in &self.slanted {
            if let Some(t) = hit_time(&sl.col, sl.t0, j) {
                let row = sl.row.at(t).expect("slanted rows are lines");
                let val = sl.value.eval(t)?;
                let cur = match out.remove(&row) {
                    None => Coef::Exact(val),
                    Some(Coef::Exact(x)) => Coef::Exact(x.add(&val)),
                    Some(other) => other,
                };
                out.insert(row, cur);
            }
        }
        out.retain(|_, c| !c.is_exact_zero());
        Ok(Some(out))
    }

    /// Whether row `k` is zero everywhere (`k <= core()`).
    pub fn row_is_zero(&self, k: i64) -> SResult<bool> {
        for (&(kk, _), p) in self.points.range((k, i64::MIN)..=(k, i64::MAX)) {
            debug_assert_eq!(kk, k);
            if !Coef::of(p)?.is_exact_zero() {
                return Ok(false);
            }
        }
        for sl in &self.slanted {
            if let Some(t) = hit_time(&sl.row, sl.t0, k) {
                if !sl.value.eval(t)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        let th = self.threshold();
        for (fam, _) in self.live() {
            match *fam {
                Family::Row(r) if r == k => return Ok(false),
                Family::Band(_) | Family::Col(_) if k > th => {
                    let (c, v) = self.split(k);
                    if !self.families[fam][c].eval(v)?.is_zero() {
                        return Ok(false);
                    }
                }
                _ => {}
            }
        }
        Ok(true)
    }

    /// Entries of columns `j = period * v + rho` beyond `core()`, as functions of `v`.
    pub fn column_class(&self, rho: i64) -> SResult<Vec<(Family, TermSum)>> {
        let p = self.period;
        let mut out = Vec::new();
        for (fam, cls) in self.live() {
            match *fam {
                Family::Band(d) => {
                    let r2 = (rho + d - 1).rem_euclid(p) + 1;
                    let s = (rho + d - r2) / p;
                    let g = cls[(r2 - 1) as usize].substitute(1, s)?;
                    out.push((*fam, g));
                }
                Family::Row(_) => out.push((*fam, cls[(rho - 1) as usize].clone())),
                Family::Col(_) => {}
            }
        }
        out.retain(|(_, g)| !g.is_zero());
        Ok(out)
    }

    /// Entries of rows `k = period * v + rho` beyond `core()`, as functions of `v`.
    pub fn row_class(&self, rho: i64) -> Vec<(Family, TermSum)> {
        self.live()
            .filter(|(f, _)| !matches!(f, Family::Row(_)))
            .map(|(f, cls)| (*f, cls[(rho - 1) as usize].clone()))
            .filter(|(_, g)| !g.is_zero())
            .collect()
    }

    /// Whether the signed aggregate vanishes off the diagonal.
    pub fn is_diagonal(&self) -> SResult<bool> {
        if self.has_slanted() {
            return Ok(false);
        }
        if self.live().any(|(f, _)| *f != Family::Band(0)) {
            return Ok(false);
        }
        for (&(k, j), p) in &self.points {
            if k != j && !Coef::of(p)?.is_exact_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Diagonal entries `k <= core()` followed by the diagonal classes.
    pub fn diagonal(&self) -> SResult<(Vec<Coef>, Vec<TermSum>)> {
        let mut head = Vec::new();
        for k in 1..=self.core() {
            head.push(self.entry(k, k)?);
        }
        let cls = self.families.get(&Family::Band(0)).cloned().unwrap_or_else(|| vec![TermSum::zero(); self.period as usize]);
        Ok((head, cls))
    }

    /// Whether the signed aggregate is exactly `diag(k^(-p))`.
    pub fn is_diagonal_power(&self, p: i64) -> SResult<bool> {
        if !self.is_diagonal()? {
            return Ok(false);
        }
        let (head, cls) = self.diagonal()?;
        for (i, c) in head.iter().enumerate() {
            let want = crate::scalar::ExactScalar::from_int(i as i64 + 1).pow_int(-p).map_err(crate::series::SeriesError::from)?;
            if !c.is_exact(&ScalarSum::from_scalar(&want)) {
                return Ok(false);
            }
        }
        for (r, g) in cls.iter().enumerate() {
            let want = TermSum::from(TermExpr::affine_pow(self.period, r as i64 + 1, (-p).into())?);
            if !g.sub(&want).is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_identity(&self) -> SResult<bool> {
        self.is_diagonal_power(0)
    }

    /// `Some(p)` for `diag(k^(-p))` with `1 <= p <= 8`.
    pub fn g_power(&self) -> SResult<Option<i64>> {
        if !self.is_diagonal()? {
            return Ok(None);
        }
        for p in 1..=8 {
            if self.is_diagonal_power(p)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    pub fn pattern(&self) -> Pattern {
        if self.has_slanted() {
            return Pattern::Other;
        }
        let live: Vec<Family> = self
            .abs_families
            .iter()
            .filter(|(_, c)| c.iter().any(|g| !g.is_zero()))
            .map(|(f, _)| *f)
            .collect();
        let rows: Vec<i64> = live.iter().filter_map(|f| if let Family::Row(k) = f { Some(*k) } else { None }).collect();
        let cols: Vec<i64> = live.iter().filter_map(|f| if let Family::Col(j) = f { Some(*j) } else { None }).collect();
        if live.iter().any(|f| matches!(f, Family::Band(d) if *d != 0)) || rows.len() > 1 || cols.len() > 1 {
            return Pattern::Other;
        }
        let off: Vec<(i64, i64)> = self
            .abs_points
            .iter()
            .filter(|((k, j), p)| k != j && !p.is_empty() && !(p.series.is_empty() && p.finite.is_zero()))
            .map(|(pos, _)| *pos)
            .collect();
        let in_row = |k: i64| off.iter().all(|(kk, _)| *kk == k);
        let in_col = |j: i64| off.iter().all(|(_, jj)| *jj == j);
        match (rows.first(), cols.first()) {
            (None, None) if off.is_empty() => Pattern::Diagonal,
            (Some(&k), None) if in_row(k) => Pattern::DiagonalPlusAnchorRow(k),
            (None, Some(&j)) if in_col(j) => Pattern::DiagonalPlusAnchorColumn(j),
            (Some(&k), Some(&j)) if off.iter().all(|(a, b)| *a == k || *b == j) => Pattern::DiagonalPlusAnchorRowAndColumn,
            (None, None) if off.iter().all(|(k, _)| *k == off[0].0) => Pattern::DiagonalPlusAnchorRow(off[0].0),
            (None, None) if off.iter().all(|(_, j)| *j == off[0].1) => Pattern::DiagonalPlusAnchorColumn(off[0].1),
            _ => Pattern::Other,
        }
    }

    /// Checks that the absolute aggregate is a bounded operator on square-summable
    /// coordinates: finite points, bounded bands and square-summable anchors.
    /// Returns the list of facts used, or the first obstruction.
    pub fn absolute_bound(&self) -> SResult<Result<Vec<String>, String>> {
        if self.has_slanted() {
            return Ok(Err("entries along lines of different slopes".into()));
        }
        let mut facts = Vec::new();
        let mut npts = 0;
        for (pos, p) in &self.abs_points {
            if let Coef::Divergent = Coef::of(p)? {
                return Ok(Err(format!("entry {:?} diverges absolutely", pos)));
            }
            npts += 1;
        }
        facts.push(format!("{} finite point entries", npts));
        for (fam, cls) in &self.abs_families {
            for (r, g) in cls.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                match fam {
                    Family::Band(_) => {
                        let e = extremes(g, self.v_start)?;
                        if !e.sup.is_finite() {
                            return Ok(Err(format!("{} unbounded on residue {}", fam, r + 1)));
                        }
                        facts.push(format!("{} bounded by {} on residue {}", fam, e.sup, r + 1));
                    }
                    Family::Row(_) | Family::Col(_) => {
                        let sq = g.mul(g);
                        if !crate::series::classify_series(&sq, self.v_start)?.converges() {
                            return Ok(Err(format!("{} not square-summable on residue {}", fam, r + 1)));
                        }
                        facts.push(format!("{} square-summable on residue {}", fam, r + 1));
                    }
                }
            }
        }
        Ok(Ok(facts))
    }
}

fn position(fam: Family, moving: i64) -> (i64, i64) {
    match fam {
        Family::Row(k) => (k, moving),
        Family::Col(j) => (moving, j),
        Family::Band(d) => (moving, moving - d),
    }
}

/// Extremes of `|g|` when all terms of `g` share one sign.
pub fn abs_extremes(g: &TermSum, v0: i64) -> SResult<Option<Extremes>> {
    let mut sign = 0i8;
    for t in g.terms() {
        let s = t.c.sign()?;
        if sign != 0 && s != sign {
            return Ok(None);
        }
        sign = s;
    }
    let h = if sign < 0 { g.neg() } else { g.clone() };
    Ok(Some(extremes(&h, v0)?))
}
