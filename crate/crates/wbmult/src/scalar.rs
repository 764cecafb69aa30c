//! Exact real scalars of the form `sign * q * prod p^(e_p)` with `q` rational and
//! fractional prime exponents, plus formal sums of such monomials.
//!
//! Canonical form: for every prime `p` the total exponent `v_p(q) + e_p` is split
//! into its integer part (truncated toward zero, kept in `q`) and the remaining
//! fractional part `e_p` with `0 < |e_p| < 1` carrying the same sign. Equal values
//! therefore have identical fields.

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::{BigRational, Ratio};
use num::{Integer, One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use thiserror::Error;

/// Rational exponent attached to a prime.
pub type Exp = Ratio<i64>;

/// Radical key: prime to exponent in `(0, 1)`.
pub type RadicalKey = BTreeMap<u64, Exp>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("sum of scalars with different radical parts is not a single scalar")]
    NotClosed,
    #[error("division by zero")]
    DivisionByZero,
    #[error("even root of a negative scalar")]
    NegativeRoot,
    #[error("integer too large to factor: {0}")]
    FactorLimit(String),
    #[error("comparison undecided at {0} bits")]
    Undecided(u32),
    #[error("malformed scalar literal `{0}`")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ScalarError>;

const SIEVE_LIMIT: u64 = 1_000_000;
const START_BITS: u32 = 53;
const MAX_BITS: u32 = 4096;

fn primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SIEVE_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut out = Vec::new();
        for i in 2..=n {
            if !composite[i] {
                out.push(i as u64);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

/// Prime factorisation by trial division up to 10^6; cofactors below 10^12 are prime.
pub fn factor(n: &BigUint) -> Result<Vec<(u64, i64)>> {
    let mut out = Vec::new();
    if n.is_zero() {
        return Err(ScalarError::DivisionByZero);
    }
    let mut rest = n.clone();
    for &p in primes() {
        if rest.is_one() {
            break;
        }
        let bp = BigUint::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut k = 0i64;
        loop {
            let (q, r) = rest.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            rest = q;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
    }
    if !rest.is_one() {
        let limit = BigUint::from(SIEVE_LIMIT) * BigUint::from(SIEVE_LIMIT);
        if rest >= limit {
            return Err(ScalarError::FactorLimit(rest.to_string()));
        }
        let p = rest.to_u64().expect("below 10^12");
        out.push((p, 1));
        out.sort();
    }
    Ok(out)
}

fn valuation(q: &BigRational, p: u64) -> i64 {
    fn val(n: &BigInt, p: &BigInt) -> i64 {
        let mut n = n.abs();
        let mut k = 0;
        if n.is_zero() {
            return 0;
        }
        loop {
            let (q, r) = n.div_rem(p);
            if !r.is_zero() {
                return k;
            }
            n = q;
            k += 1;
        }
    }
    let bp = BigInt::from(p);
    val(q.numer(), &bp) - val(q.denom(), &bp)
}

fn rat_pow(base: u64, e: i64) -> BigRational {
    let b = BigInt::from(base);
    if e >= 0 {
        BigRational::from_integer(num::pow(b, e as usize))
    } else {
        BigRational::new(BigInt::one(), num::pow(b, (-e) as usize))
    }
}

fn exp_trunc(e: Exp) -> i64 {
    // Ratio::trunc rounds toward zero
    e.trunc().to_integer()
}

/// An exact real scalar in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactScalar {
    sign: i8,
    coeff: BigRational,
    radical: RadicalKey,
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar { sign: 0, coeff: BigRational::one(), radical: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_frac(n: i64, d: i64) -> Self {
        Self::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        let sign = if q.is_negative() { -1 } else { 1 };
        ExactScalar { sign, coeff: q.abs(), radical: BTreeMap::new() }
    }

    /// `p^e` for a prime `p` (not checked further than `p >= 2`).
    pub fn prime_power(p: u64, e: Exp) -> Result<Self> {
        let mut extra = BTreeMap::new();
        extra.insert(p, e);
        Ok(Self::normalize(1, BigRational::one(), extra))
    }

    fn normalize(sign: i8, mut coeff: BigRational, extra: BTreeMap<u64, Exp>) -> Self {
        if sign == 0 || coeff.is_zero() {
            return Self::zero();
        }
        let mut radical = BTreeMap::new();
        for (p, r) in extra {
            if r.is_zero() {
                continue;
            }
            let v = valuation(&coeff, p);
            let total = Exp::from_integer(v) + r;
            let i = exp_trunc(total);
            let f = total - Exp::from_integer(i);
            coeff *= rat_pow(p, i - v);
            if !f.is_zero() {
                radical.insert(p, f);
            }
        }
        ExactScalar { sign, coeff, radical }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn radical(&self) -> &RadicalKey {
        &self.radical
    }

    pub fn is_rational(&self) -> bool {
        self.radical.is_empty()
    }

    /// Signed rational value when there is no radical part.
    pub fn to_rational(&self) -> Option<BigRational> {
        if !self.is_rational() {
            return None;
        }
        Some(self.signed_coeff())
    }

    fn signed_coeff(&self) -> BigRational {
        match self.sign {
            0 => BigRational::zero(),
            1 => self.coeff.clone(),
            _ => -self.coeff.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.sign = -out.sign;
        out
    }

    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        if out.sign < 0 {
            out.sign = 1;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut extra = self.radical.clone();
        for (p, e) in &other.radical {
            *extra.entry(*p).or_insert_with(Exp::zero) += e;
        }
        Self::normalize(self.sign * other.sign, &self.coeff * &other.coeff, extra)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let extra = self.radical.iter().map(|(p, e)| (*p, -e)).collect();
        Ok(Self::normalize(self.sign, self.coeff.recip(), extra))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn pow_int(&self, k: i64) -> Result<Self> {
        if self.is_zero() {
            return if k > 0 { Ok(Self::zero()) } else { Err(ScalarError::DivisionByZero) };
        }
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let k = k.unsigned_abs();
        let coeff = num::pow(base.coeff.clone(), k as usize);
        let extra = base
            .radical
            .iter()
            .map(|(p, e)| (*p, e * Exp::from_integer(k as i64)))
            .collect();
        let sign = if base.sign < 0 && k % 2 == 1 { -1 } else { 1 };
        Ok(Self::normalize(sign, coeff, extra))
    }

    /// Real power with rational exponent. Negative bases need an odd denominator.
    pub fn pow_rat(&self, q: Exp) -> Result<Self> {
        if q.is_integer() {
            return self.pow_int(q.to_integer());
        }
        if self.is_zero() {
            return if q > Exp::zero() { Ok(Self::zero()) } else { Err(ScalarError::DivisionByZero) };
        }
        let mut sign = 1;
        if self.sign < 0 {
            if q.denom() % 2 == 0 {
                return Err(ScalarError::NegativeRoot);
            }
            if q.numer() % 2 != 0 {
                sign = -1;
            }
        }
        let mut extra: BTreeMap<u64, Exp> = BTreeMap::new();
        let num = self.coeff.numer().magnitude().clone();
        let den = self.coeff.denom().magnitude().clone();
        for (p, k) in factor(&num)? {
            *extra.entry(p).or_insert_with(Exp::zero) += Exp::from_integer(k) * q;
        }
        for (p, k) in factor(&den)? {
            *extra.entry(p).or_insert_with(Exp::zero) -= Exp::from_integer(k) * q;
        }
        for (p, e) in &self.radical {
            *extra.entry(*p).or_insert_with(Exp::zero) += e * q;
        }
        Ok(Self::normalize(sign, BigRational::one(), extra))
    }

    /// Monomial view: signed rational times a key with exponents in `(0, 1)`.
    pub fn to_monomial(&self) -> (BigRational, RadicalKey) {
        let mut c = self.signed_coeff();
        let mut key = BTreeMap::new();
        for (p, e) in &self.radical {
            if *e < Exp::zero() {
                c /= BigRational::from_integer(BigInt::from(*p));
                key.insert(*p, e + Exp::one());
            } else {
                key.insert(*p, *e);
            }
        }
        (c, key)
    }

    pub fn from_monomial(c: BigRational, key: &RadicalKey) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let sign = if c.is_negative() { -1 } else { 1 };
        Self::normalize(sign, c.abs(), key.clone())
    }

    /// Sum, defined only when both operands share a radical key.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let (a, ka) = self.to_monomial();
        let (b, kb) = other.to_monomial();
        if ka != kb {
            return Err(ScalarError::NotClosed);
        }
        Ok(Self::from_monomial(a + b, &ka))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Exact comparison of magnitudes through a common integer power.
    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        if self.sign != other.sign {
            return self.sign.cmp(&other.sign);
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let ratio = self.abs().div(&other.abs()).expect("nonzero");
        let l = ratio.radical.values().fold(1i64, |acc, e| acc.lcm(e.denom()));
        let r = ratio.pow_int(l).expect("nonzero");
        let mag = r.coeff.cmp(&BigRational::one());
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self.cmp_exact(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.cmp_exact(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn interval(&self, bits: u32) -> DInterval {
        if self.is_zero() {
            return DInterval::zero();
        }
        let mut acc = DInterval::from_rational(&self.coeff, bits);
        for (p, e) in &self.radical {
            acc = acc.mul(&DInterval::prime_root(*p, *e, bits), bits);
        }
        if self.sign < 0 {
            acc.neg()
        } else {
            acc
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.interval(START_BITS + 11).mid_f64()
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        if self.sign < 0 {
            write!(f, "-")?;
        }
        let mut first = true;
        if !self.coeff.is_one() || self.radical.is_empty() {
            write!(f, "{}", self.coeff)?;
            first = false;
        }
        for (p, e) in &self.radical {
            if !first {
                write!(f, "*")?;
            }
            write!(f, "{}^({}/{})", p, e.numer(), e.denom())?;
            first = false;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Cursor<'a> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }
    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn int(&mut self) -> Option<BigInt> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return None;
        }
        std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }
    fn small(&mut self) -> Option<i64> {
        let neg = self.eat(b'-');
        let v = self.int()?.to_i64()?;
        Some(if neg { -v } else { v })
    }
}

impl FromStr for ExactScalar {
    type Err = ScalarError;

    /// `['-'] INT ['/' INT] { '*' INT '^' '(' INT '/' INT ')' }`; a leading
    /// radical without coefficient is accepted as well.
    fn from_str(src: &str) -> Result<Self> {
        let bad = || ScalarError::Parse(src.to_string());
        let mut c = Cursor { s: src.as_bytes(), i: 0 };
        let neg = c.eat(b'-');
        let mut acc = ExactScalar::one();
        let mut expect_factor = false;
        loop {
            let n = c.int().ok_or_else(bad)?;
            if c.eat(b'^') {
                if !c.eat(b'(') {
                    return Err(bad());
                }
                let a = c.small().ok_or_else(bad)?;
                let b = if c.eat(b'/') { c.small().ok_or_else(bad)? } else { 1 };
                if b == 0 || !c.eat(b')') {
                    return Err(bad());
                }
                let base = ExactScalar::from_rational(BigRational::from_integer(n));
                acc = acc.mul(&base.pow_rat(Exp::new(a, b))?);
            } else {
                if expect_factor {
                    return Err(bad());
                }
                let d = if c.eat(b'/') { c.int().ok_or_else(bad)? } else { BigInt::one() };
                if d.is_zero() {
                    return Err(ScalarError::DivisionByZero);
                }
                acc = acc.mul(&ExactScalar::from_rational(BigRational::new(n, d)));
            }
            expect_factor = true;
            if !c.eat(b'*') {
                break;
            }
        }
        if c.peek().is_some() {
            return Err(bad());
        }
        Ok(if neg { acc.neg() } else { acc })
    }
}

/// Closed dyadic interval `[lo, hi] * 2^exp`.
#[derive(Clone, Debug)]
pub struct DInterval {
    lo: BigInt,
    hi: BigInt,
    exp: i64,
}

fn bitlen(n: &BigInt) -> i64 {
    n.bits() as i64
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn shift(n: &BigInt, k: i64) -> BigInt {
    if k >= 0 {
        n << (k as usize)
    } else {
        n >> ((-k) as usize)
    }
}

impl DInterval {
    pub fn zero() -> Self {
        DInterval { lo: BigInt::zero(), hi: BigInt::zero(), exp: 0 }
    }

    fn from_rational(q: &BigRational, bits: u32) -> Self {
        let n = q.numer();
        let d = q.denom();
        let s = bits as i64 + 2 + bitlen(d) - bitlen(n);
        let scaled = shift(n, s.max(0));
        let d2 = shift(d, (-s).max(0));
        DInterval { lo: floor_div(&scaled, &d2), hi: ceil_div(&scaled, &d2), exp: -s }
    }

    /// Enclosure of `p^e` with `|e| < 1`.
    fn prime_root(p: u64, e: Exp, bits: u32) -> Self {
        let a = *e.numer();
        let b = *e.denom();
        let s = bits as i64 + 4;
        let x = num::pow(BigUint::from(p), a.unsigned_abs() as usize);
        let scaled = x << ((b * s) as usize);
        let r = BigInt::from(scaled.nth_root(b as u32));
        let up = DInterval { lo: r.clone(), hi: r + 1, exp: -s };
        if a > 0 {
            up
        } else {
            up.recip(bits)
        }
    }

    fn recip(&self, bits: u32) -> Self {
        // 1 / [lo, hi] for positive intervals
        let s = bits as i64 + 4 + bitlen(&self.hi);
        let one = BigInt::one() << (s as usize);
        DInterval {
            lo: floor_div(&one, &self.hi),
            hi: ceil_div(&one, &self.lo),
            exp: -s - self.exp,
        }
    }

    fn round(self, bits: u32) -> Self {
        let excess = bitlen(&self.hi.abs().max(self.lo.abs())) - bits as i64 - 8;
        if excess <= 0 {
            return self;
        }
        let div = BigInt::one() << (excess as usize);
        DInterval { lo: floor_div(&self.lo, &div), hi: ceil_div(&self.hi, &div), exp: self.exp + excess }
    }

    fn mul(&self, other: &Self, bits: u32) -> Self {
        // both operands non-negative
        DInterval { lo: &self.lo * &other.lo, hi: &self.hi * &other.hi, exp: self.exp + other.exp }.round(bits)
    }

    fn neg(&self) -> Self {
        DInterval { lo: -self.hi.clone(), hi: -self.lo.clone(), exp: self.exp }
    }

    fn add(&self, other: &Self) -> Self {
        if self.lo.is_zero() && self.hi.is_zero() {
            return other.clone();
        }
        if other.lo.is_zero() && other.hi.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = self.exp - e;
        let b = other.exp - e;
        DInterval {
            lo: shift(&self.lo, a) + shift(&other.lo, b),
            hi: shift(&self.hi, a) + shift(&other.hi, b),
            exp: e,
        }
    }

    /// Sign if the interval excludes zero.
    pub fn sign(&self) -> Option<i8> {
        if self.lo.sign() == Sign::Plus {
            Some(1)
        } else if self.hi.sign() == Sign::Minus {
            Some(-1)
        } else {
            None
        }
    }

    pub fn mid_f64(&self) -> f64 {
        let mid = &self.lo + &self.hi;
        let extra = (bitlen(&mid) - 60).max(0);
        let m = shift(&mid, -extra).to_f64().unwrap_or(0.0);
        ldexp(m, self.exp + extra - 1)
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    if x == 0.0 || (x.abs().log2().ceil() as i64) + e < -1076 {
        return 0.0;
    }
    while e > 900 {
        x *= 2f64.powi(900);
        e -= 900;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -900 {
        x *= 2f64.powi(-900);
        e += 900;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Formal sum of monomials over distinct radical keys. Distinct keys are
/// linearly independent over the rationals, so the representation is canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarSum {
    terms: BTreeMap<RadicalKey, BigRational>,
}

impl ScalarSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_scalar(x: &ExactScalar) -> Self {
        let mut s = Self::zero();
        s.add_scalar(x);
        s
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_scalar(&ExactScalar::from_int(n))
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

    pub fn terms(&self) -> impl Iterator<Item = ExactScalar> + '_ {
        self.terms.iter().map(|(k, c)| ExactScalar::from_monomial(c.clone(), k))
    }

    pub fn add_scalar(&mut self, x: &ExactScalar) {
        if x.is_zero() {
            return;
        }
        let (c, k) = x.to_monomial();
        let slot = self.terms.entry(k.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for x in other.terms() {
            out.add_scalar(&x);
        }
        out
    }

    pub fn neg(&self) -> Self {
        ScalarSum { terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, x: &ExactScalar) -> Self {
        let mut out = Self::zero();
        for t in self.terms() {
            out.add_scalar(&t.mul(x));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for a in self.terms() {
            for b in other.terms() {
                out.add_scalar(&a.mul(&b));
            }
        }
        out
    }

    /// The single monomial, if the sum has at most one term.
    pub fn as_scalar(&self) -> Option<ExactScalar> {
        match self.terms.len() {
            0 => Some(ExactScalar::zero()),
            1 => self.terms().next(),
            _ => None,
        }
    }

    pub fn interval(&self, bits: u32) -> DInterval {
        let mut acc = DInterval::zero();
        for t in self.terms() {
            acc = acc.add(&t.interval(bits));
        }
        acc
    }

    /// Exact sign: zero is decided structurally, otherwise by refining intervals.
    pub fn sign(&self) -> Result<i8> {
        if let Some(x) = self.as_scalar() {
            return Ok(x.sign());
        }
        let mut bits = START_BITS;
        loop {
            if let Some(s) = self.interval(bits).sign() {
                return Ok(s);
            }
            if bits >= MAX_BITS {
                return Err(ScalarError::Undecided(bits));
            }
            bits = (bits * 2).min(MAX_BITS);
        }
    }

    pub fn cmp(&self, other: &Self) -> Result<Ordering> {
        Ok(self.sub(other).sign()?.cmp(&0))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms().map(|t| t.to_f64()).sum()
    }
}

impl From<ExactScalar> for ScalarSum {
    fn from(x: ExactScalar) -> Self {
        ScalarSum::from_scalar(&x)
    }
}

impl fmt::Display for ScalarSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> ExactScalar {
        x.parse().unwrap()
    }

    #[test]
    fn canonical_forms() {
        let a = s("2*2^(-1/2)");
        assert_eq!(a.coeff(), &BigRational::one());
        assert_eq!(a.radical().get(&2), Some(&Exp::new(1, 2)));
        let b = s("1/2*2^(-1/2)");
        assert_eq!(b.coeff(), &BigRational::new(1.into(), 2.into()));
        assert_eq!(b.radical().get(&2), Some(&Exp::new(-1, 2)));
        assert_eq!(s("6^(1/2)"), s("2^(1/2)*3^(1/2)"));
        assert_eq!(s("4^(1/2)"), ExactScalar::from_int(2));
        assert_eq!(s("0"), ExactScalar::zero());
        assert_eq!(ExactScalar::zero().coeff(), &BigRational::one());
    }

    #[test]
    fn root_times_root() {
        let r = s("2^(1/2)");
        assert_eq!(r.mul(&r), ExactScalar::from_int(2));
        let q = s("3^(1/3)");
        assert_eq!(q.pow_int(3).unwrap(), ExactScalar::from_int(3));
        assert_eq!(s("2^(1/4)").pow_rat(Exp::from_integer(4)).unwrap(), ExactScalar::from_int(2));
    }

    #[test]
    fn add_requires_matching_radicals() {
        assert_eq!(s("2^(1/2)").add(&s("3^(1/2)")), Err(ScalarError::NotClosed));
        assert_eq!(s("2^(-1/2)").add(&s("3*2^(-1/2)")).unwrap(), s("2*2^(1/2)"));
        assert_eq!(s("1/2").add(&s("1/3")).unwrap(), s("5/6"));
    }

    #[test]
    fn comparisons() {
        assert_eq!(s("2^(1/2)").cmp_exact(&s("3/2")), Ordering::Less);
        assert_eq!(s("-2^(1/2)").cmp_exact(&s("-3/2")), Ordering::Greater);
        assert_eq!(s("2^(1/3)").cmp_exact(&s("3^(1/5)")), Ordering::Greater);
        let sum = ScalarSum::from_scalar(&s("2^(1/2)")).add(&ScalarSum::from_scalar(&s("3^(1/2)")));
        let target = ScalarSum::from_scalar(&s("10^(1/2)"));
        // 3.146... against 3.162...
        assert_eq!(sum.cmp(&target).unwrap(), Ordering::Less);
    }

    #[test]
    fn display_roundtrip() {
        for x in ["-3/4*2^(1/2)", "2^(1/2)*3^(-1/3)", "7", "-1/9", "5^(2/3)"] {
            let v = s(x);
            assert_eq!(s(&v.to_string()), v);
        }
    }

    #[test]
    fn float_conversion() {
        assert_eq!(s("2^(1/2)").to_f64(), std::f64::consts::SQRT_2);
        assert_eq!(s("1/3").to_f64(), 1.0 / 3.0);
        let tiny = ExactScalar::from_frac(1, 2).pow_int(1070).unwrap();
        assert_eq!(tiny.to_f64(), f64::from_bits(1 << 4));
        assert_eq!(ExactScalar::from_frac(1, 2).pow_int(5000).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn sums_cancel_exactly() {
        let mut acc = ScalarSum::zero();
        acc.add_scalar(&s("2^(-1/2)"));
        acc.add_scalar(&s("-1/2*2^(1/2)"));
        assert!(acc.is_zero());
    }
}
