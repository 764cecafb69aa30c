//! Functions on the positive integers assembled from finitely many points,
//! convergent series sitting on single points, and arithmetic progressions,
//! normalised to residue classes modulo a common period.

use crate::scalar::ScalarSum;
use crate::series::{classify_series, extremes, Extreme, Result, SeriesVerdict, TermSum};
use num::integer::lcm;
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Value at a single point: a finite part plus series over `t >= t0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointValue {
    pub finite: ScalarSum,
    pub series: Vec<(TermSum, i64)>,
}

impl PointValue {
    pub fn value(&self) -> Result<Extreme> {
        let mut acc = self.finite.clone();
        let mut approx = false;
        let mut est = 0.0;
        let mut merged: BTreeMap<i64, TermSum> = BTreeMap::new();
        for (f, t0) in &self.series {
            let e = merged.entry(*t0).or_default();
            *e = e.add(f);
        }
        for (t0, f) in &merged {
            match classify_series(f, *t0)? {
                SeriesVerdict::ConvergesTo(v) => acc = acc.add(&v),
                SeriesVerdict::ConvergesUnknownValue { estimate } => {
                    approx = true;
                    est += estimate;
                }
                SeriesVerdict::Diverges | SeriesVerdict::Undetermined => return Ok(Extreme::Infinite),
            }
        }
        if approx {
            Ok(Extreme::Approx(acc.to_f64() + est))
        } else {
            Ok(Extreme::Exact(acc))
        }
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_zero() && self.series.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProfileBuilder {
    points: BTreeMap<i64, PointValue>,
    lines: Vec<(i64, i64, i64, TermSum)>,
}

impl ProfileBuilder {
    pub fn add_point(&mut self, k: i64, v: &ScalarSum) {
        let p = self.points.entry(k).or_default();
        p.finite = p.finite.add(v);
    }

    pub fn add_series(&mut self, k: i64, f: TermSum, t0: i64) {
        self.points.entry(k).or_default().series.push((f, t0));
    }

    /// Value `f(t)` at `k = a t + b` for every `t >= t0`.
    pub fn add_line(&mut self, a: i64, b: i64, t0: i64, f: TermSum) {
        if !f.is_zero() {
            self.lines.push((a, b, t0, f));
        }
    }

    pub fn finish(self) -> Result<Profile> {
        let period = self.lines.iter().fold(1i64, |p, (a, ..)| lcm(p, *a));
        let mut subs: Vec<(i64, i64, TermSum)> = Vec::new();
        for (a, b, t0, f) in &self.lines {
            subs.extend(split_line(*a, *b, *t0, f, period)?);
        }
        let max_point = self.points.keys().copied().max().unwrap_or(0);
        let mut v_start = (max_point + period - 1).div_euclid(period).max(1);
        for (_, v0, g) in &subs {
            v_start = v_start.max(*v0).max(g.positive_from());
        }
        let mut points = self.points;
        let mut classes = vec![TermSum::zero(); period as usize];
        for (rho, v0, g) in subs {
            for v in v0..v_start {
                let k = period * v + rho;
                let p = points.entry(k).or_default();
                p.finite = p.finite.add(&g.eval(v)?);
            }
            let c = &mut classes[(rho - 1) as usize];
            *c = c.add(&g);
        }
        Ok(Profile { period, v_start, points, classes })
    }
}

/// Split `f(t)` placed at `k = a t + b`, `t >= t0`, into sub-lines
/// `k = period * v + rho` with `rho` in `1..=period`, returned as
/// `(rho, first v, g(v))`. `a` must divide `period`.
pub fn split_line(a: i64, b: i64, t0: i64, f: &TermSum, period: i64) -> Result<Vec<(i64, i64, TermSum)>> {
    let q = period / a;
    let mut out = Vec::with_capacity(q as usize);
    for r in 1..=q {
        // t = q u + (r - q), u >= 1
        let c = a * (r - q) + b;
        let rho = (c - 1).rem_euclid(period) + 1;
        let s = (c - rho) / period;
        // v = u + s; t = q v + (r - q - q s)
        let g = f.substitute(q, r - q - q * s)?;
        let u0 = (t0 - r + q + q - 1).div_euclid(q).max(1);
        out.push((rho, u0 + s, g));
    }
    Ok(out)
}

/// `value(k)` for `k >= 1`: explicit points for `k <= period * v_start`, and
/// `classes[rho - 1](v)` at `k = period * v + rho` for `v >= v_start`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub period: i64,
    pub v_start: i64,
    pub points: BTreeMap<i64, PointValue>,
    pub classes: Vec<TermSum>,
}

impl Profile {
    /// Largest index held as an explicit point.
    pub fn cutoff(&self) -> i64 {
        self.period * self.v_start
    }

    pub fn class_of(&self, k: i64) -> (usize, i64) {
        let rho = (k - 1).rem_euclid(self.period) + 1;
        ((rho - 1) as usize, (k - rho) / self.period)
    }

    pub fn value_at(&self, k: i64) -> Result<Extreme> {
        if k <= self.cutoff() {
            return match self.points.get(&k) {
                Some(p) => p.value(),
                None => Ok(Extreme::Exact(ScalarSum::zero())),
            };
        }
        let (c, v) = self.class_of(k);
        Ok(Extreme::Exact(self.classes[c].eval(v)?))
    }

    pub fn value_f64(&self, k: i64) -> Result<f64> {
        if k > self.cutoff() {
            let (c, v) = self.class_of(k);
            return Ok(self.classes[c].eval_f64(v));
        }
        Ok(self.value_at(k)?.to_f64())
    }

    /// Whether every `k >= 1` carries a nonzero value.
    pub fn covers_all(&self) -> bool {
        (1..=self.cutoff()).all(|k| self.points.get(&k).is_some_and(|p| !p.is_empty()))
            && self.classes.iter().all(|c| !c.is_zero())
    }

    /// `(sup, inf)` over all `k >= 1` for non-negative profiles.
    pub fn extremes(&self) -> Result<(Extreme, Extreme, bool)> {
        let mut sup = Extreme::Exact(ScalarSum::zero());
        let mut inf: Option<Extreme> = None;
        let mut inf_positive = true;
        for k in 1..=self.cutoff() {
            let v = match self.points.get(&k) {
                Some(p) => p.value()?,
                None => Extreme::Exact(ScalarSum::zero()),
            };
            if let Extreme::Exact(x) = &v {
                if x.is_zero() {
                    inf_positive = false;
                }
            }
            sup = ext_max(sup, v.clone())?;
            inf = Some(match inf {
                None => v,
                Some(i) => ext_min(i, v)?,
            });
        }
        for c in &self.classes {
            if c.is_zero() {
                inf_positive = false;
                inf = Some(Extreme::Exact(ScalarSum::zero()));
                continue;
            }
            let e = extremes(c, self.v_start)?;
            inf_positive &= e.inf_positive;
            sup = ext_max(sup, e.sup)?;
            inf = Some(match inf {
                None => e.inf,
                Some(i) => ext_min(i, e.inf)?,
            });
        }
        Ok((sup, inf.unwrap_or(Extreme::Exact(ScalarSum::zero())), inf_positive))
    }
}

pub fn ext_max(a: Extreme, b: Extreme) -> Result<Extreme> {
    Ok(match (a, b) {
        (Extreme::Infinite, _) | (_, Extreme::Infinite) => Extreme::Infinite,
        (Extreme::Exact(x), Extreme::Exact(y)) => Extreme::Exact(if x.cmp(&y)? == Ordering::Less { y } else { x }),
        (x, y) => Extreme::Approx(x.to_f64().max(y.to_f64())),
    })
}

pub fn ext_min(a: Extreme, b: Extreme) -> Result<Extreme> {
    Ok(match (a, b) {
        (Extreme::Infinite, y) => y,
        (x, Extreme::Infinite) => x,
        (Extreme::Exact(x), Extreme::Exact(y)) => Extreme::Exact(if x.cmp(&y)? == Ordering::Greater { y } else { x }),
        (x, y) => Extreme::Approx(x.to_f64().min(y.to_f64())),
    })
}
