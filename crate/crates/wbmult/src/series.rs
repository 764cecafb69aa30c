//! Symbolic terms `c * prod (a x + b)^p * r^x` over an integer variable, sums of
//! such terms, and series over `x >= x0`: convergence, exact values where a
//! closed form exists, partial sums, tail bounds and extremes.

use crate::scalar::{ExactScalar, Exp, ScalarError, ScalarSum};
use num::bigint::BigInt;
use num::integer::gcd;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("series diverges")]
    Diverges,
    #[error("no closed form for the sum")]
    ValueUnknown,
    #[error("base {0}*x{1:+} is not positive on the domain")]
    NonPositiveBase(i64, i64),
    #[error("search range exceeded while locating extremes")]
    Unbounded,
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// Cap on the integer prefix scanned for extremes.
const SCAN_CAP: i64 = 200_000;

/// The `x`-dependent part of a term: affine-power factors and a geometric base.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    factors: BTreeMap<(i64, i64), Exp>,
    geo: ExactScalar,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { factors: BTreeMap::new(), geo: ExactScalar::one() }
    }
}

impl Shape {
    pub fn factors(&self) -> &BTreeMap<(i64, i64), Exp> {
        &self.factors
    }

    pub fn geo(&self) -> &ExactScalar {
        &self.geo
    }

    pub fn degree(&self) -> Exp {
        self.factors.values().fold(Exp::zero(), |a, b| a + b)
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty() && self.geo == ExactScalar::one()
    }

    /// Growth ordering: geometric base first, then polynomial degree.
    pub fn growth_cmp(&self, other: &Shape) -> Ordering {
        self.geo.cmp_exact(&other.geo).then(self.degree().cmp(&other.degree()))
    }

    fn mul(&self, other: &Shape) -> Shape {
        let mut factors = self.factors.clone();
        for (k, p) in &other.factors {
            let e = factors.entry(*k).or_insert_with(Exp::zero);
            *e += p;
            if e.is_zero() {
                factors.remove(k);
            }
        }
        Shape { factors, geo: self.geo.mul(&other.geo) }
    }

    /// Smallest `x` at which every base is positive.
    pub fn positive_from(&self) -> i64 {
        self.factors.keys().map(|(a, b)| (-b).div_euclid(*a) + 1).max().unwrap_or(i64::MIN)
    }
}

/// A single term: `c * shape(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermExpr {
    pub c: ScalarSum,
    pub shape: Shape,
}

fn affine_factor(a: i64, b: i64, p: Exp) -> Result<TermExpr> {
    if p.is_zero() {
        return Ok(TermExpr::constant(ExactScalar::one()));
    }
    if a == 0 {
        if b <= 0 {
            return Err(SeriesError::NonPositiveBase(a, b));
        }
        return Ok(TermExpr::constant(ExactScalar::from_int(b).pow_rat(p)?));
    }
    if a < 0 {
        return Err(SeriesError::NonPositiveBase(a, b));
    }
    let g = gcd(a, b.abs()).max(1);
    let c = ExactScalar::from_int(g).pow_rat(p)?;
    let mut factors = BTreeMap::new();
    factors.insert((a / g, b / g), p);
    Ok(TermExpr { c: ScalarSum::from_scalar(&c), shape: Shape { factors, geo: ExactScalar::one() } })
}

impl TermExpr {
    pub fn constant(c: ExactScalar) -> Self {
        TermExpr { c: ScalarSum::from_scalar(&c), shape: Shape::default() }
    }

    pub fn constant_sum(c: ScalarSum) -> Self {
        TermExpr { c, shape: Shape::default() }
    }

    /// `(a x + b)^p`.
    pub fn affine_pow(a: i64, b: i64, p: Exp) -> Result<Self> {
        affine_factor(a, b, p)
    }

    /// `r^x` for positive `r`.
    pub fn geometric(r: ExactScalar) -> Result<Self> {
        if r.sign() <= 0 {
            return Err(SeriesError::NonPositiveBase(0, 0));
        }
        Ok(TermExpr { c: ScalarSum::from_int(1), shape: Shape { factors: BTreeMap::new(), geo: r } })
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero()
    }

    pub fn mul(&self, other: &TermExpr) -> TermExpr {
        TermExpr { c: self.c.mul(&other.c), shape: self.shape.mul(&other.shape) }
    }

    pub fn scale(&self, x: &ExactScalar) -> TermExpr {
        TermExpr { c: self.c.scale(x), shape: self.shape.clone() }
    }

    pub fn neg(&self) -> TermExpr {
        TermExpr { c: self.c.neg(), shape: self.shape.clone() }
    }

    pub fn abs(&self) -> Result<TermExpr> {
        let s = self.c.sign()?;
        Ok(if s < 0 { self.neg() } else { self.clone() })
    }

    /// Integer power; only defined for single-monomial constants when `k` is not a
    /// natural number.
    pub fn pow_int(&self, k: i64) -> Result<TermExpr> {
        let c = if k >= 0 {
            let mut acc = ScalarSum::from_int(1);
            for _ in 0..k {
                acc = acc.mul(&self.c);
            }
            acc
        } else {
            let single = self.c.as_scalar().ok_or(SeriesError::ValueUnknown)?;
            ScalarSum::from_scalar(&single.pow_int(k)?)
        };
        let factors = self
            .shape
            .factors
            .iter()
            .map(|(b, p)| (*b, p * Exp::from_integer(k)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Ok(TermExpr { c, shape: Shape { factors, geo: self.shape.geo.pow_int(k)? } })
    }

    /// Substitute `x = q u + s`, giving a term in `u`.
    pub fn substitute(&self, q: i64, s: i64) -> Result<TermExpr> {
        let mut out = TermExpr::constant_sum(self.c.clone());
        for ((a, b), p) in &self.shape.factors {
            out = out.mul(&affine_factor(a * q, a * s + b, *p)?);
        }
        let r = &self.shape.geo;
        if *r != ExactScalar::one() {
            out = out.mul(&TermExpr::geometric(r.pow_int(q)?)?);
            out = out.scale(&r.pow_int(s)?);
        }
        Ok(out)
    }

    pub fn eval(&self, x: i64) -> Result<ScalarSum> {
        let mut v = ExactScalar::one();
        for ((a, b), p) in &self.shape.factors {
            let base = a * x + b;
            if base <= 0 {
                return Err(SeriesError::NonPositiveBase(*a, *b));
            }
            v = v.mul(&ExactScalar::from_int(base).pow_rat(*p)?);
        }
        v = v.mul(&self.shape.geo.pow_int(x)?);
        Ok(self.c.scale(&v))
    }

    pub fn eval_f64(&self, x: i64) -> f64 {
        let mut log = 0.0;
        for ((a, b), p) in &self.shape.factors {
            let base = (a * x + b) as f64;
            log += p.to_f64().unwrap_or(0.0) * base.ln();
        }
        if self.shape.geo != ExactScalar::one() {
            log += x as f64 * self.shape.geo.to_f64().ln();
        }
        let c = self.c.to_f64();
        if log == 0.0 {
            c
        } else {
            c * log.exp()
        }
    }

    /// Limit of `|term|` as `x -> infinity`.
    pub fn limit(&self) -> Result<Limit> {
        if self.c.is_zero() {
            return Ok(Limit::Finite(ScalarSum::zero()));
        }
        match self.shape.geo.cmp_exact(&ExactScalar::one()) {
            Ordering::Less => return Ok(Limit::Finite(ScalarSum::zero())),
            Ordering::Greater => return Ok(Limit::Infinite),
            Ordering::Equal => {}
        }
        let d = self.shape.degree();
        if d < Exp::zero() {
            return Ok(Limit::Finite(ScalarSum::zero()));
        }
        if d > Exp::zero() {
            return Ok(Limit::Infinite);
        }
        let mut k = ExactScalar::one();
        for ((a, _), p) in &self.shape.factors {
            k = k.mul(&ExactScalar::from_int(*a).pow_rat(*p)?);
        }
        Ok(Limit::Finite(self.c.scale(&k).abs_value()?))
    }

    /// Leading asymptotic coefficient: `term ~ lead * x^degree * r^x`.
    fn lead(&self) -> Result<ScalarSum> {
        let mut k = ExactScalar::one();
        for ((a, _), p) in &self.shape.factors {
            k = k.mul(&ExactScalar::from_int(*a).pow_rat(*p)?);
        }
        Ok(self.c.scale(&k))
    }

    /// `x` beyond which the term is strictly monotone, with the eventual direction
    /// (`+1` increasing, `-1` decreasing, `0` constant).
    pub fn monotone_from(&self, x0: i64) -> Result<(i64, i8)> {
        let r = &self.shape.geo;
        let gammas: Vec<(f64, f64)> = self
            .shape
            .factors
            .iter()
            .map(|((a, b), p)| (*b as f64 / *a as f64, p.to_f64().unwrap_or(0.0)))
            .collect();
        let gmax = gammas.iter().map(|(g, _)| g.abs()).fold(0.0, f64::max);
        let psum: f64 = gammas.iter().map(|(_, p)| p.abs()).sum();
        match r.cmp_exact(&ExactScalar::one()) {
            Ordering::Equal => {}
            ord => {
                let lnr = r.to_f64().ln().abs();
                let x = gmax + 1.01 * psum / lnr + 2.0;
                let dir = if ord == Ordering::Greater { 1 } else { -1 };
                return Ok((clamp_x(x, x0)?, dir));
            }
        }
        if self.shape.factors.is_empty() {
            return Ok((x0, 0));
        }
        // expansion of the log-derivative in powers of 1/x
        let exact: Vec<(BigRational, BigRational)> = self
            .shape
            .factors
            .iter()
            .map(|((a, b), p)| {
                (
                    BigRational::new(BigInt::from(*b), BigInt::from(*a)),
                    BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom())),
                )
            })
            .collect();
        for m in 0..=exact.len() {
            let mut cm = BigRational::zero();
            for (g, p) in &exact {
                cm += p * num::pow(-g.clone(), m);
            }
            if !cm.is_zero() {
                let dir = if cm.is_positive() { 1 } else { -1 };
                let cabs = cm.abs().to_f64().unwrap_or(f64::MIN_POSITIVE);
                let rem: f64 = gammas.iter().map(|(g, p)| p.abs() * g.abs().powi(m as i32 + 1)).sum();
                let x = (2.0 * gmax).max(2.0 * rem / cabs * 1.01) + 2.0;
                return Ok((clamp_x(x, x0)?, dir));
            }
        }
        Ok((x0, 0))
    }
}

fn clamp_x(x: f64, x0: i64) -> Result<i64> {
    if !x.is_finite() || x > (SCAN_CAP as f64) + x0.max(0) as f64 {
        return Err(SeriesError::Unbounded);
    }
    Ok((x.ceil() as i64).max(x0))
}

impl ScalarSum {
    fn abs_value(&self) -> Result<ScalarSum> {
        Ok(if self.sign().map_err(SeriesError::from)? < 0 { self.neg() } else { self.clone() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Limit {
    Finite(ScalarSum),
    Infinite,
}

/// Rewrites `(a x + b)^n (c x + d)^q`, `n >= 1` an integer and `q` a negative integer, through
/// `a x + b = (a/c)(c x + d) + (b c - a d)/c`, so that quotients of polynomials reach a normal form.
fn split_quotient(t: &TermExpr) -> Option<(TermExpr, TermExpr)> {
    let f = &t.shape.factors;
    let zero = Exp::zero();
    let (&(a, b), _) = f.iter().find(|(_, p)| p.is_integer() && **p > zero)?;
    let (&(c, d), _) = f.iter().find(|(_, p)| p.is_integer() && **p < zero)?;
    let one = Exp::from_integer(1);
    let bump = |s: &mut Shape, k: (i64, i64), by: Exp| {
        let e = s.factors.entry(k).or_insert_with(Exp::zero);
        *e += by;
        if e.is_zero() {
            s.factors.remove(&k);
        }
    };
    let mut lead = t.shape.clone();
    bump(&mut lead, (a, b), -one);
    let rest = lead.clone();
    bump(&mut lead, (c, d), one);
    let u = TermExpr { c: t.c.scale(&ExactScalar::from_frac(a, c)), shape: lead };
    let v = TermExpr { c: t.c.scale(&ExactScalar::from_frac(b * c - a * d, c)), shape: rest };
    Some((u, v))
}

/// Sum of terms with distinct shapes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermSum {
    terms: BTreeMap<Shape, ScalarSum>,
}

impl From<TermExpr> for TermSum {
    fn from(t: TermExpr) -> Self {
        let mut s = TermSum::default();
        s.add_term(&t);
        s
    }
}

impl TermSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = TermExpr> + '_ {
        self.terms.iter().map(|(s, c)| TermExpr { c: c.clone(), shape: s.clone() })
    }

    pub fn add_term(&mut self, t: &TermExpr) {
        if t.c.is_zero() {
            return;
        }
        if let Some((u, v)) = split_quotient(t) {
            self.add_term(&u);
            self.add_term(&v);
            return;
        }
        let slot = self.terms.entry(t.shape.clone()).or_default();
        *slot = slot.add(&t.c);
        if slot.is_zero() {
            self.terms.remove(&t.shape);
        }
    }

    pub fn add(&self, other: &TermSum) -> TermSum {
        let mut out = self.clone();
        for t in other.terms() {
            out.add_term(&t);
        }
        out
    }

    pub fn neg(&self) -> TermSum {
        let mut out = TermSum::zero();
        for t in self.terms() {
            out.add_term(&t.neg());
        }
        out
    }

    pub fn sub(&self, other: &TermSum) -> TermSum {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &TermSum) -> TermSum {
        let mut out = TermSum::zero();
        for a in self.terms() {
            for b in other.terms() {
                out.add_term(&a.mul(&b));
            }
        }
        out
    }

    pub fn substitute(&self, q: i64, s: i64) -> Result<TermSum> {
        let mut out = TermSum::zero();
        for t in self.terms() {
            out.add_term(&t.substitute(q, s)?);
        }
        Ok(out)
    }

    pub fn eval(&self, x: i64) -> Result<ScalarSum> {
        let mut acc = ScalarSum::zero();
        for t in self.terms() {
            acc = acc.add(&t.eval(x)?);
        }
        Ok(acc)
    }

    pub fn eval_f64(&self, x: i64) -> f64 {
        self.terms().map(|t| t.eval_f64(x)).sum()
    }

    /// The constant value, if the sum does not depend on `x`.
    pub fn as_constant(&self) -> Option<ScalarSum> {
        match self.terms.len() {
            0 => Some(ScalarSum::zero()),
            1 => {
                let (s, c) = self.terms.iter().next()?;
                s.is_constant().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Limit of the sum when all terms are non-negative on the domain.
    pub fn limit(&self) -> Result<Limit> {
        let mut acc = ScalarSum::zero();
        for t in self.terms() {
            match t.limit()? {
                Limit::Infinite => return Ok(Limit::Infinite),
                Limit::Finite(v) => {
                    let lead = if t.c.sign()? < 0 { v.neg() } else { v };
                    acc = acc.add(&lead);
                }
            }
        }
        Ok(Limit::Finite(acc))
    }

    /// Whether `x -> sum(x)` tends to zero, for signed sums.
    pub fn tends_to_zero(&self) -> Result<bool> {
        let dom = match self.dominant()? {
            None => return Ok(true),
            Some(d) => d,
        };
        if dom.1.is_zero() {
            // leading terms cancel; fall back to the individual terms
            return Ok(self.terms().all(|t| matches!(t.limit(), Ok(Limit::Finite(v)) if v.is_zero())));
        }
        let probe = TermExpr { c: dom.1, shape: dom.0 };
        Ok(matches!(probe.limit()?, Limit::Finite(v) if v.is_zero()))
    }

    /// Dominant growth class and the combined leading coefficient.
    fn dominant(&self) -> Result<Option<(Shape, ScalarSum)>> {
        let mut best: Option<Shape> = None;
        for s in self.terms.keys() {
            best = match best {
                None => Some(s.clone()),
                Some(b) => Some(if s.growth_cmp(&b) == Ordering::Greater { s.clone() } else { b }),
            };
        }
        let best = match best {
            None => return Ok(None),
            Some(b) => b,
        };
        let mut lead = ScalarSum::zero();
        for t in self.terms() {
            if t.shape.growth_cmp(&best) == Ordering::Equal {
                lead = lead.add(&t.lead()?);
            }
        }
        Ok(Some((Shape { factors: BTreeMap::new(), geo: best.geo.clone() }.with_degree(best.degree()), lead)))
    }

    pub fn positive_from(&self) -> i64 {
        self.terms.keys().map(Shape::positive_from).max().unwrap_or(i64::MIN)
    }
}

impl Shape {
    fn with_degree(mut self, d: Exp) -> Shape {
        if !d.is_zero() {
            self.factors.insert((1, 0), d);
        }
        self
    }
}

/// Outcome of summing a series over `x >= x0`.
#[derive(Clone, Debug, PartialEq)]
pub enum SeriesVerdict {
    ConvergesTo(ScalarSum),
    ConvergesUnknownValue { estimate: f64 },
    Diverges,
    Undetermined,
}

impl SeriesVerdict {
    pub fn converges(&self) -> bool {
        matches!(self, SeriesVerdict::ConvergesTo(_) | SeriesVerdict::ConvergesUnknownValue { .. })
    }
}

fn convergent_growth(s: &Shape) -> bool {
    match s.geo.cmp_exact(&ExactScalar::one()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => s.degree() < Exp::from_integer(-1),
    }
}

/// Convergence of `sum_{x >= x0} f(x)`.
pub fn classify_series(f: &TermSum, x0: i64) -> Result<SeriesVerdict> {
    let (shape, lead) = match f.dominant()? {
        None => return Ok(SeriesVerdict::ConvergesTo(ScalarSum::zero())),
        Some(d) => d,
    };
    if !convergent_growth(&shape) {
        if lead.is_zero() {
            return Ok(SeriesVerdict::Undetermined);
        }
        return Ok(SeriesVerdict::Diverges);
    }
    match sum_exact(f, x0) {
        Ok(v) => Ok(SeriesVerdict::ConvergesTo(v)),
        Err(SeriesError::ValueUnknown) => {
            let cut = x0 + 4096;
            let head = partial_sum_f64(f, x0, cut);
            Ok(SeriesVerdict::ConvergesUnknownValue { estimate: head })
        }
        Err(e) => Err(e),
    }
}

/// Exact value of a convergent series, when every term is a polynomial times a
/// geometric factor.
pub fn sum_series(f: &TermSum, x0: i64) -> Result<ScalarSum> {
    match classify_series(f, x0)? {
        SeriesVerdict::ConvergesTo(v) => Ok(v),
        SeriesVerdict::Diverges => Err(SeriesError::Diverges),
        _ => Err(SeriesError::ValueUnknown),
    }
}

fn sum_exact(f: &TermSum, x0: i64) -> Result<ScalarSum> {
    let mut acc = ScalarSum::zero();
    for t in f.terms() {
        acc = acc.add(&sum_poly_geo(&t, x0)?);
    }
    Ok(acc)
}

fn poly_of(shape: &Shape) -> Option<Vec<BigRational>> {
    let mut poly = vec![BigRational::one()];
    for ((a, b), p) in &shape.factors {
        if !p.is_integer() || *p < Exp::zero() {
            return None;
        }
        for _ in 0..p.to_integer() {
            let mut next = vec![BigRational::zero(); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i] += c * BigRational::from_integer(BigInt::from(*b));
                next[i + 1] += c * BigRational::from_integer(BigInt::from(*a));
            }
            poly = next;
        }
    }
    Some(poly)
}

fn poly_eval(p: &[BigRational], x: i64) -> BigRational {
    let xb = BigRational::from_integer(BigInt::from(x));
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * &xb + c)
}

fn poly_backward_diff(p: &[BigRational]) -> Vec<BigRational> {
    // q(x) = p(x) - p(x - 1)
    let n = p.len();
    let mut shifted = vec![BigRational::zero(); n];
    for (k, c) in p.iter().enumerate() {
        // (x - 1)^k = sum_j C(k, j) x^j (-1)^(k-j)
        let mut binom = BigRational::one();
        for j in (0..=k).rev() {
            let sign = if (k - j) % 2 == 0 { BigRational::one() } else { -BigRational::one() };
            shifted[j] += c * &binom * sign;
            if j > 0 {
                binom = binom * BigRational::from_integer(BigInt::from(j as i64))
                    / BigRational::from_integer(BigInt::from((k - j + 1) as i64));
            }
        }
    }
    let mut q: Vec<BigRational> = p.iter().zip(shifted.iter()).map(|(a, b)| a - b).collect();
    while q.len() > 1 && q.last().is_some_and(Zero::is_zero) {
        q.pop();
    }
    if q.iter().all(Zero::is_zero) {
        q.clear();
    }
    q
}

/// `1 / (1 - r)` as a formal sum, using `1 - r^L` rational for a common `L`.
pub fn inv_one_minus(r: &ExactScalar) -> Result<ScalarSum> {
    let l = r.radical().values().fold(1i64, |acc, e| num::integer::lcm(acc, *e.denom()));
    let rl = r.pow_int(l)?.to_rational().expect("rational power");
    let denom = BigRational::one() - rl;
    if denom.is_zero() {
        return Err(SeriesError::Diverges);
    }
    let inv = ExactScalar::from_rational(denom.recip());
    let mut acc = ScalarSum::zero();
    let mut pw = ExactScalar::one();
    for _ in 0..l {
        acc.add_scalar(&pw.mul(&inv));
        pw = pw.mul(r);
    }
    Ok(acc)
}

fn sum_poly_geo(t: &TermExpr, x0: i64) -> Result<ScalarSum> {
    let poly = poly_of(&t.shape).ok_or(SeriesError::ValueUnknown)?;
    let r = &t.shape.geo;
    if r.cmp_exact(&ExactScalar::one()) != Ordering::Less {
        return Err(SeriesError::Diverges);
    }
    let inv = inv_one_minus(r)?;
    // S(P, x0) = (P(x0) r^x0 + S(P(x) - P(x-1), x0 + 1)) / (1 - r)
    fn rec(p: &[BigRational], x0: i64, r: &ExactScalar, inv: &ScalarSum) -> Result<ScalarSum> {
        if p.is_empty() {
            return Ok(ScalarSum::zero());
        }
        let head = ExactScalar::from_rational(poly_eval(p, x0)).mul(&r.pow_int(x0)?);
        let q = poly_backward_diff(p);
        let rest = rec(&q, x0 + 1, r, inv)?;
        Ok(ScalarSum::from_scalar(&head).add(&rest).mul(inv))
    }
    Ok(rec(&poly, x0, r, &inv)?.mul(&t.c))
}

/// Exact partial sum `sum_{x = x0}^{x1} f(x)`.
pub fn partial_sum(f: &TermSum, x0: i64, x1: i64) -> Result<ScalarSum> {
    if x1 < x0 {
        return Ok(ScalarSum::zero());
    }
    let mut acc = ScalarSum::zero();
    for t in f.terms() {
        let pure_geo = t.shape.factors.is_empty() && t.shape.geo != ExactScalar::one();
        if pure_geo && x1 - x0 > 64 {
            // c (r^x0 - r^(x1+1)) / (1 - r)
            let r = &t.shape.geo;
            let diff = ScalarSum::from_scalar(&r.pow_int(x0)?).sub(&ScalarSum::from_scalar(&r.pow_int(x1 + 1)?));
            let geo = inv_one_minus(r)?;
            acc = acc.add(&diff.mul(&geo).mul(&t.c));
        } else {
            for x in x0..=x1 {
                acc = acc.add(&t.eval(x)?);
            }
        }
    }
    Ok(acc)
}

pub fn partial_sum_f64(f: &TermSum, x0: i64, x1: i64) -> f64 {
    // smallest terms first for convergent tails
    let mut total = 0.0;
    let mut x = x1;
    while x >= x0 {
        total += f.eval_f64(x);
        x -= 1;
    }
    total
}

/// Upper bound on `sum_{x > x1} |f(x)|`, rounded upward.
pub fn tail_bound(f: &TermSum, x1: i64) -> Result<f64> {
    let mut total = 0.0;
    for t in f.terms() {
        total += term_tail_bound(&t, x1)?;
    }
    Ok(round_up(total))
}

fn round_up(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (x * (1.0 + 1e-9)).next_up()
    }
}

fn term_tail_bound(t: &TermExpr, x1: i64) -> Result<f64> {
    let c = t.c.to_f64().abs();
    if c == 0.0 {
        return Ok(0.0);
    }
    let r = &t.shape.geo;
    match r.cmp_exact(&ExactScalar::one()) {
        Ordering::Greater => Err(SeriesError::Diverges),
        Ordering::Less => {
            let rf = r.to_f64();
            let mut start = x1;
            let mut head = 0.0;
            loop {
                // ratio bound on f(x+1)/f(x) for x > start
                let mut rho = rf;
                for ((a, b), p) in &t.shape.factors {
                    let pf = p.to_f64().unwrap_or(0.0);
                    if pf > 0.0 {
                        let num = (a * (start + 2) + b) as f64;
                        let den = (a * (start + 1) + b) as f64;
                        rho *= (num / den).powf(pf);
                    }
                }
                if rho < 1.0 {
                    let first = t.eval_f64(start + 1).abs();
                    return Ok(head + first / (1.0 - rho));
                }
                start += 1;
                head += t.eval_f64(start).abs();
                if start - x1 > SCAN_CAP {
                    return Err(SeriesError::Unbounded);
                }
            }
        }
        Ordering::Equal => {
            let d = t.shape.degree().to_f64().unwrap_or(0.0);
            if d >= -1.0 {
                return Err(SeriesError::Diverges);
            }
            let x = (x1.max(1)) as f64;
            let mut k = c;
            for ((a, b), p) in &t.shape.factors {
                let pf = p.to_f64().unwrap_or(0.0);
                let af = *a as f64;
                let corr = 1.0 + *b as f64 / (af * (x + 1.0));
                let worst = if (pf < 0.0 && *b < 0) || (pf > 0.0 && *b > 0) { corr.powf(pf) } else { 1.0 };
                k *= af.powf(pf) * worst;
            }
            Ok(k * x.powf(d + 1.0) / (-d - 1.0))
        }
    }
}

/// Supremum or infimum of a non-negative function on its domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Extreme {
    Exact(ScalarSum),
    Approx(f64),
    Infinite,
}

impl Extreme {
    pub fn is_finite(&self) -> bool {
        !matches!(self, Extreme::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extreme::Exact(v) => v.to_f64(),
            Extreme::Approx(v) => *v,
            Extreme::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extreme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extreme::Exact(v) => write!(f, "{}", v),
            Extreme::Approx(v) => write!(f, "~{}", v),
            Extreme::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extremes {
    pub sup: Extreme,
    pub inf: Extreme,
    pub sup_finite: bool,
    pub inf_positive: bool,
}

/// Extremes over `x >= x0` of a sum of positive terms.
pub fn extremes(f: &TermSum, x0: i64) -> Result<Extremes> {
    if f.is_zero() {
        let z = Extreme::Exact(ScalarSum::zero());
        return Ok(Extremes { sup: z.clone(), inf: z, sup_finite: true, inf_positive: false });
    }
    let mut dirs = Vec::new();
    let mut xmax = x0;
    for t in f.terms() {
        let (x, d) = t.monotone_from(x0)?;
        xmax = xmax.max(x);
        dirs.push(d);
    }
    let lim = f.limit()?;
    let sup_finite = !matches!(lim, Limit::Infinite);
    let inf_positive = match &lim {
        Limit::Infinite => true,
        Limit::Finite(v) => v.sign()? > 0,
    };
    let up = dirs.iter().all(|d| *d >= 0);
    let down = dirs.iter().all(|d| *d <= 0);
    if !(up || down) || xmax - x0 > SCAN_CAP {
        let mut hi = f64::MIN;
        let mut lo = f64::MAX;
        for x in x0..=(x0 + 4096) {
            let v = f.eval_f64(x);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        let lim_f = match &lim {
            Limit::Infinite => f64::INFINITY,
            Limit::Finite(v) => v.to_f64(),
        };
        let sup = if sup_finite { Extreme::Approx(hi.max(lim_f)) } else { Extreme::Infinite };
        return Ok(Extremes { sup, inf: Extreme::Approx(lo.min(lim_f)), sup_finite, inf_positive });
    }
    let mut best_hi: Option<ScalarSum> = None;
    let mut best_lo: Option<ScalarSum> = None;
    for x in x0..=xmax {
        let v = f.eval(x)?;
        best_hi = Some(match best_hi {
            Some(b) if b.cmp(&v)? != Ordering::Less => b,
            _ => v.clone(),
        });
        best_lo = Some(match best_lo {
            Some(b) if b.cmp(&v)? != Ordering::Greater => b,
            _ => v,
        });
    }
    let hi = best_hi.expect("non-empty range");
    let lo = best_lo.expect("non-empty range");
    let (sup, inf) = match lim {
        Limit::Infinite => (Extreme::Infinite, Extreme::Exact(lo)),
        Limit::Finite(l) => {
            let sup = if hi.cmp(&l)? == Ordering::Less { l.clone() } else { hi };
            let inf = if lo.cmp(&l)? == Ordering::Greater { l } else { lo };
            (Extreme::Exact(sup), Extreme::Exact(inf))
        }
    };
    Ok(Extremes { sup, inf, sup_finite, inf_positive })
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.c.len() > 1 { format!("({})", self.c) } else { self.c.to_string() };
        write!(f, "{}", c)?;
        for ((a, b), p) in &self.shape.factors {
            write!(f, "*({}*x{:+})^({})", a, b, p)?;
        }
        if self.shape.geo != ExactScalar::one() {
            write!(f, "*({})^x", self.shape.geo)?;
        }
        Ok(())
    }
}

impl fmt::Display for TermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, t) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t)?;
        }
        Ok(())
    }
}
