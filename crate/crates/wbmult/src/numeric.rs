//! Finite sections of multipliers, frame-bound estimates and rearrangement
//! experiments in 64-bit floating point.

use crate::analyzer::AnalyzerError;
use crate::scalar::ScalarSum;
use num::BigRational;
use crate::sequence::{Index, SequenceSpec, SpecError};
use crate::series::{partial_sum, partial_sum_f64, tail_bound, SeriesError, TermExpr, TermSum};
use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const ITERATION_CAP: usize = 100_000;
const EPS: f64 = f64::EPSILON;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error("budget of {budget} blocks does not reach block {needed}, which touches index {index}")]
    Budget { budget: i64, needed: i64, index: i64 },
    #[error("{what} did not converge within {cap} iterations")]
    NonConvergence { what: &'static str, cap: usize },
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SeriesError> for NumericError {
    fn from(e: SeriesError) -> Self {
        NumericError::Analyzer(e.into())
    }
}

impl From<SpecError> for NumericError {
    fn from(e: SpecError) -> Self {
        NumericError::Analyzer(e.into())
    }
}

impl From<crate::scalar::ScalarError> for NumericError {
    fn from(e: crate::scalar::ScalarError) -> Self {
        NumericError::Analyzer(e.into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationResult {
    pub n: usize,
    pub entries_used: u64,
    /// Row-major `n x n`, row index follows `phi`, column index follows `psi`.
    pub matrix: Vec<f64>,
    /// Bound on the operator-norm distance to the compression of the full operator.
    pub tail_bound: Option<f64>,
    /// Every entry is a finite sum of terms, so the matrix is exact up to rounding.
    pub finite: bool,
}

impl TruncationResult {
    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.matrix[(k - 1) * self.n + (j - 1)]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.matrix)
    }

    pub fn transpose(&self) -> TruncationResult {
        let n = self.n;
        let mut t = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                t[j * n + k] = self.matrix[k * n + j];
            }
        }
        TruncationResult { matrix: t, ..self.clone() }
    }

    /// Writes the matrix as CSV, one row per line, 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<(), NumericError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for row in self.matrix.chunks(self.n) {
            let cells: Vec<String> = row.iter().map(|x| format!("{:.16e}", x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(out.flush()?)
    }
}

/// Last block `t >= t0` with `a t + b <= n`, if any.
fn last_block(a: i64, b: i64, t0: i64, n: i64) -> Option<i64> {
    let t = (n - b).div_euclid(a);
    (t >= t0).then_some(t)
}

#[derive(Default)]
struct Cell {
    exact: ScalarSum,
    approx: f64,
    /// Bound on the floating point error carried by `approx`.
    err: f64,
}

/// Finite section of `M_{m,phi,psi}` on `span(e_1..e_n)` from the first `budget` blocks.
pub fn truncate_matrix(
    m: &SequenceSpec,
    phi: &SequenceSpec,
    psi: &SequenceSpec,
    n: usize,
    budget: i64,
) -> Result<TruncationResult, NumericError> {
    if n == 0 {
        return Err(NumericError::EmptyDimension);
    }
    if !phi.is_aligned(psi) || !phi.is_aligned(m) {
        return Err(AnalyzerError::ShapeMismatch(format!("{}, {}, {}", m.name, phi.name, psi.name)).into());
    }
    for s in [phi, psi] {
        if !s.has_indices() {
            return Err(SpecError::MissingIndex(s.name.clone()).into());
        }
    }
    let ni = n as i64;
    let mut cells: BTreeMap<(i64, i64), Cell> = BTreeMap::new();
    let mut used = 0u64;
    let mut tail = Some(0.0f64);
    let mut finite = true;
    for ((mu, c), d) in m.prelude.iter().zip(&phi.prelude).zip(&psi.prelude) {
        if let (Some(k), Some(j)) = (c.index.at(0), d.index.at(0)) {
            if k <= ni && j <= ni {
                let w = mu.weight.mul(&c.weight).mul(&d.weight);
                let cell = cells.entry((k, j)).or_default();
                cell.exact = cell.exact.add(&w.eval(0)?);
                used += 1;
            }
        }
    }
    for ((ms, ps), qs) in m.slots().into_iter().zip(phi.slots()).zip(psi.slots()) {
        let g = &phi.groups[ps.group];
        let a = ps.count.mul(&ms.weight).mul(&ps.weight).mul(&qs.weight);
        let t0 = ps.t0;
        if let (Index::Const(k), Index::Const(j)) = (ps.index, qs.index) {
            if k > ni || j > ni || budget < t0 {
                continue;
            }
            for t in t0..=budget {
                used += g.count_at(t) as u64;
            }
            finite = false;
            let f = TermSum::from(a.clone());
            let cell = cells.entry((k, j)).or_default();
            if a.shape.factors().is_empty() {
                cell.exact = cell.exact.add(&partial_sum(&f, t0, budget)?);
            } else {
                let s = partial_sum_f64(&f, t0, budget);
                let abs = partial_sum_f64(&TermSum::from(a.abs()?), t0, budget);
                cell.approx += s;
                cell.err += (budget - t0 + 2) as f64 * EPS * abs;
            }
            tail = match (tail, tail_bound(&f, budget)) {
                (Some(x), Ok(b)) => Some(x + b),
                _ => None,
            };
            continue;
        }
        // some index moves along a line, so only finitely many blocks land inside
        let mut t1 = i64::MAX;
        for idx in [ps.index, qs.index] {
            if let Index::Line(s, b) = idx {
                t1 = t1.min(last_block(s, b, t0, ni).unwrap_or(t0 - 1));
            }
        }
        if t1 > budget {
            return Err(NumericError::Budget { budget, needed: t1, index: ni });
        }
        for t in t0..=t1 {
            let (k, j) = match (ps.index.at(t), qs.index.at(t)) {
                (Some(k), Some(j)) => (k, j),
                _ => continue,
            };
            if k > ni || j > ni || k < 1 || j < 1 {
                continue;
            }
            let cell = cells.entry((k, j)).or_default();
            cell.exact = cell.exact.add(&a.eval(t)?);
            used += g.count_at(t) as u64;
        }
    }
    let mut matrix = vec![0.0; n * n];
    let mut rounding = 0.0f64;
    for ((k, j), cell) in cells {
        let x = cell.exact.to_f64();
        let v = x + cell.approx;
        let exact = cell.approx == 0.0
            && cell.exact.as_scalar().and_then(|s| s.to_rational()).is_some_and(|q| BigRational::from_float(x) == Some(q));
        if !exact {
            rounding += cell.err + 2.0 * EPS * v.abs();
        }
        matrix[(k as usize - 1) * n + (j as usize - 1)] = v;
    }
    let tail_bound = tail.map(|t| (t + rounding).next_up());
    Ok(TruncationResult { n, entries_used: used, matrix, tail_bound, finite })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityDeviation {
    /// `max |A_kj - delta_kj|` of the truncation.
    pub deviation: f64,
    /// Certified bound; infinite when some series lacks a tail bound.
    pub bound: f64,
    /// The truncation involved only finite sums, so the deviation must vanish.
    pub finite: bool,
}

impl IdentityDeviation {
    pub fn passes(&self) -> bool {
        self.deviation <= self.bound && (!self.finite || self.deviation == 0.0)
    }
}

pub fn identity_deviation(
    m: &SequenceSpec,
    phi: &SequenceSpec,
    psi: &SequenceSpec,
    n: usize,
    budget: i64,
) -> Result<IdentityDeviation, NumericError> {
    let tr = truncate_matrix(m, phi, psi, n, budget)?;
    let mut dev = 0.0f64;
    for k in 1..=n {
        for j in 1..=n {
            let want = if k == j { 1.0 } else { 0.0 };
            dev = dev.max((tr.get(k, j) - want).abs());
        }
    }
    Ok(IdentityDeviation { deviation: dev, bound: tr.tail_bound.unwrap_or(f64::INFINITY), finite: tr.finite })
}

/// All-ones symbol aligned with `spec`.
pub fn unit_symbol(spec: &SequenceSpec) -> SequenceSpec {
    let one = TermExpr::constant(crate::scalar::ExactScalar::one());
    let mut s = spec.clone();
    s.name = "1".into();
    for e in s.prelude.iter_mut().chain(s.groups.iter_mut().flat_map(|g| g.entries.iter_mut())) {
        e.weight = one.clone();
        e.index = Index::Free;
    }
    s
}

/// Extreme eigenvalues of the truncated frame operator `T_Phi U_Phi` on
/// `span(e_1..e_n)`, over the coordinates that `phi` reaches at all.
pub fn frame_bounds_numeric(phi: &SequenceSpec, n: usize, budget: i64) -> Result<(f64, f64), NumericError> {
    let tr = truncate_matrix(&unit_symbol(phi), phi, phi, n, budget)?;
    let hit: Vec<usize> = (1..=n).filter(|&k| (1..=n).any(|j| tr.get(k, j) != 0.0 || tr.get(j, k) != 0.0)).collect();
    if hit.is_empty() {
        return Ok((0.0, 0.0));
    }
    let s = DMatrix::from_fn(hit.len(), hit.len(), |a, b| tr.get(hit[a], hit[b]));
    let eig = SymmetricEigen::try_new(s, 1e-14, ITERATION_CAP)
        .ok_or(NumericError::NonConvergence { what: "symmetric eigenvalue iteration", cap: ITERATION_CAP })?;
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// `(sigma_min, sigma_max)` of a truncation.
pub fn singular_extremes(tr: &TruncationResult) -> Result<(f64, f64), NumericError> {
    let svd = tr
        .to_dmatrix()
        .try_svd(false, false, 1e-15, ITERATION_CAP)
        .ok_or(NumericError::NonConvergence { what: "singular value iteration", cap: ITERATION_CAP })?;
    let lo = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StressStrategy {
    /// Keep only the terms with positive coefficient in each coordinate.
    PositiveOnly,
    /// Per coordinate, keep whichever sign gives the larger partial sum.
    AlternatingWorst,
}

/// Norm of the sub-series of `sum_n m_n <f, psi_n> phi_n` over the first `blocks`
/// blocks that keeps, per coordinate, terms of one sign only. Here `f = sum_j f(j) e_j`.
pub fn rearrangement_stress(
    m: &SequenceSpec,
    phi: &SequenceSpec,
    psi: &SequenceSpec,
    f: &TermExpr,
    strategy: StressStrategy,
    blocks: i64,
) -> Result<f64, NumericError> {
    if !phi.is_aligned(psi) || !phi.is_aligned(m) {
        return Err(AnalyzerError::ShapeMismatch(format!("{}, {}, {}", m.name, phi.name, psi.name)).into());
    }
    let mut pos: HashMap<i64, f64> = HashMap::new();
    let mut neg: HashMap<i64, f64> = HashMap::new();
    let mut push = |k: i64, x: f64| {
        if x > 0.0 {
            *pos.entry(k).or_default() += x;
        } else if x < 0.0 {
            *neg.entry(k).or_default() -= x;
        }
    };
    for ((mu, c), d) in m.prelude.iter().zip(&phi.prelude).zip(&psi.prelude) {
        if let (Some(k), Some(j)) = (c.index.at(0), d.index.at(0)) {
            let w = mu.weight.eval_f64(0) * c.weight.eval_f64(0) * d.weight.eval_f64(0);
            push(k, w * f.eval_f64(j));
        }
    }
    for ((ms, ps), qs) in m.slots().into_iter().zip(phi.slots()).zip(psi.slots()) {
        let g = &phi.groups[ps.group];
        for t in ps.t0..=blocks {
            let (k, j) = match (ps.index.at(t), qs.index.at(t)) {
                (Some(k), Some(j)) => (k, j),
                _ => continue,
            };
            let w = ms.weight.eval_f64(t) * ps.weight.eval_f64(t) * qs.weight.eval_f64(t);
            let x = w * f.eval_f64(j);
            // copies are identical, so one sign class takes them all
            push(k, g.count_at(t) as f64 * x);
        }
    }
    let mut keys: Vec<i64> = pos.keys().chain(neg.keys()).cloned().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut total = 0.0f64;
    for k in keys {
        let p = pos.get(&k).cloned().unwrap_or(0.0);
        let q = neg.get(&k).cloned().unwrap_or(0.0);
        let v = match strategy {
            StressStrategy::PositiveOnly => p,
            StressStrategy::AlternatingWorst => p.max(q),
        };
        total += v * v;
    }
    Ok(total.sqrt())
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

    fn remark_a() -> (SequenceSpec, SequenceSpec, SequenceSpec) {
        (
            spec("seq m\nblock t>=1 {\n repeat 1: [ (w=1) ]\n repeat t-1: [ (w=1), (w=1) ]\n}\n"),
            spec("seq p\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n repeat t-1: [ (w=1, idx=t), (w=1, idx=t) ]\n}\n"),
            spec("seq q\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n repeat t-1: [ (w=1, idx=t), (w=-1, idx=t) ]\n}\n"),
        )
    }

    #[test]
    fn diagonal_section() {
        let m = spec("seq m\nblock t>=1 {\n repeat 1: [ (w=t^(-1)) ]\n}\n");
        let tr = truncate_matrix(&m, &basis(), &basis(), 3, 10).unwrap();
        assert_eq!(tr.matrix, vec![1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0 / 3.0]);
        assert_eq!(tr.entries_used, 3);
        assert!(tr.tail_bound.unwrap() < 1e-15);
        let (lo, hi) = singular_extremes(&tr).unwrap();
        assert!((lo - 1.0 / 3.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn geometric_anchor() {
        // e_1 gets sum_t 2^-t, e_t+1 plain
        let phi = spec("seq p\nblock t>=1 {\n repeat 1: [ (w=(1/2)^t, idx=1), (w=1, idx=t+1) ]\n}\n");
        let psi = spec("seq q\nblock t>=1 {\n repeat 1: [ (w=1, idx=1), (w=1, idx=t+1) ]\n}\n");
        let m = unit_symbol(&phi);
        let d = identity_deviation(&m, &phi, &psi, 8, 64).unwrap();
        // 1 - 2^-64 rounds to 1, the bound still carries the tail
        assert!(d.deviation <= 2f64.powi(-60));
        assert!(d.bound >= 2f64.powi(-64) && d.passes());
        let d = identity_deviation(&m, &phi, &psi, 8, 10_000).unwrap();
        assert_eq!(d.deviation, 0.0);
        assert!(truncate_matrix(&m, &phi, &psi, 8, 3).is_err());
    }

    #[test]
    fn conditional_identity_is_exact() {
        let (m, phi, psi) = remark_a();
        let d = identity_deviation(&m, &phi, &psi, 32, 10_000).unwrap();
        assert_eq!(d.deviation, 0.0);
        let a = truncate_matrix(&m, &phi, &psi, 16, 100).unwrap();
        let b = truncate_matrix(&m, &psi, &phi, 16, 100).unwrap();
        assert_eq!(a.transpose().matrix, b.matrix);
    }

    #[test]
    fn stress_grows_like_root_t() {
        let (m, phi, psi) = remark_a();
        let f = TermExpr::affine_pow(1, 0, (-1).into()).unwrap();
        let s100 = rearrangement_stress(&m, &phi, &psi, &f, StressStrategy::PositiveOnly, 100).unwrap();
        let s10k = rearrangement_stress(&m, &phi, &psi, &f, StressStrategy::PositiveOnly, 10_000).unwrap();
        assert!((s100 - 10.0).abs() < 1e-9);
        assert!((s10k - 100.0).abs() < 1e-7);
        let e = basis();
        let one = unit_symbol(&e);
        let s = rearrangement_stress(&one, &e, &e, &f, StressStrategy::AlternatingWorst, 100).unwrap();
        assert!(s < (std::f64::consts::PI.powi(2) / 6.0).sqrt());
    }

    #[test]
    fn frame_bounds() {
        assert_eq!(frame_bounds_numeric(&basis(), 16, 100).unwrap(), (1.0, 1.0));
        let p = spec("seq x\nprelude [ (1, 1) ]\nblock t>=1 {\n repeat 1: [ (w=1, idx=t) ]\n}\n");
        assert_eq!(frame_bounds_numeric(&p, 16, 100).unwrap(), (1.0, 2.0));
        let p = spec("seq x\nblock t>=1 {\n repeat 1: [ (w=t^(-1), idx=t) ]\n}\n");
        let (lo, hi) = frame_bounds_numeric(&p, 16, 100).unwrap();
        assert!((lo - 1.0 / 256.0).abs() < 1e-15 && hi == 1.0);
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let m = spec("seq m\nblock t>=1 {\n repeat 1: [ (w=t^(-1)) ]\n}\n");
        let tr = truncate_matrix(&m, &basis(), &basis(), 3, 10).unwrap();
        let dir = std::env::temp_dir().join(format!("wbmult-csv-{}", std::process::id()));
        tr.write_csv(&dir).unwrap();
        let text = std::fs::read_to_string(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        let last: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(last[2], "3.3333333333333331e-1");
        assert_eq!(last[2].parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
