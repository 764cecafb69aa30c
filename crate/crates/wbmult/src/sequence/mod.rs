//! Weighted-basis sequences `phi_n = c_n e_{sigma(n)}` given by a finite prelude
//! followed by blocks indexed by `t >= 1`.

pub mod classify;
pub mod dsl;
mod profile;

pub use classify::{classify_sequence, classify_symbol, Kind, SequenceClass, SymbolClass, SymbolKind};
pub use profile::{ext_max, ext_min, split_line, PointValue, Profile, ProfileBuilder};

use crate::scalar::ExactScalar;
use crate::series::{SeriesError, TermExpr};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("index of entry {entry} in group {group} is not positive for every block")]
    NonPositiveIndex { group: usize, entry: usize },
    #[error("repeat count of group {0} is negative for some block")]
    NegativeRepeat(usize),
    #[error("weight of entry {entry} in group {group} is zero or undefined on its blocks")]
    BadWeight { group: usize, entry: usize },
    #[error("sequences `{0}` and `{1}` do not share a block layout")]
    Misaligned(String, String),
    #[error("sequence `{0}` has an entry without an index")]
    MissingIndex(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Basis index of an entry as a function of the block number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Index {
    Const(i64),
    /// `a * t + b` with `a >= 1`.
    Line(i64, i64),
    /// Symbols carry no index.
    Free,
}

impl Index {
    pub fn at(&self, t: i64) -> Option<i64> {
        match self {
            Index::Const(k) => Some(*k),
            Index::Line(a, b) => Some(a * t + b),
            Index::Free => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub weight: TermExpr,
    pub index: Index,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    /// Copies per block: `a * t + b`.
    pub repeat: (i64, i64),
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub name: String,
    pub prelude: Vec<Entry>,
    pub groups: Vec<Group>,
}

/// One entry position inside the block, repeated `count(t)` times in block `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub group: usize,
    pub entry: usize,
    /// First block in which the slot has at least one copy.
    pub t0: i64,
    pub count: TermExpr,
    pub weight: TermExpr,
    pub index: Index,
}

impl Group {
    /// First block with a positive repeat count, if any.
    pub fn first_block(&self) -> Option<i64> {
        let (a, b) = self.repeat;
        if a == 0 {
            return (b >= 1).then_some(1);
        }
        // smallest t >= 1 with a t + b >= 1
        let t = (1 - b + a - 1).div_euclid(a);
        Some(t.max(1))
    }

    pub fn count_at(&self, t: i64) -> i64 {
        (self.repeat.0 * t + self.repeat.1).max(0)
    }
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        for (gi, g) in self.groups.iter().enumerate() {
            let (a, b) = g.repeat;
            if a < 0 || a + b < 0 {
                return Err(SpecError::NegativeRepeat(gi));
            }
            let t0 = match g.first_block() {
                Some(t) => t,
                None => continue,
            };
            for (ei, e) in g.entries.iter().enumerate() {
                match e.index {
                    Index::Const(k) if k < 1 => return Err(SpecError::NonPositiveIndex { group: gi, entry: ei }),
                    Index::Line(a, b) if a < 1 || a * t0 + b < 1 => {
                        return Err(SpecError::NonPositiveIndex { group: gi, entry: ei })
                    }
                    _ => {}
                }
                if e.weight.is_zero() || e.weight.shape.positive_from() > t0 {
                    return Err(SpecError::BadWeight { group: gi, entry: ei });
                }
            }
        }
        for (ei, e) in self.prelude.iter().enumerate() {
            if let Index::Const(k) = e.index {
                if k < 1 {
                    return Err(SpecError::NonPositiveIndex { group: usize::MAX, entry: ei });
                }
            }
            if e.weight.is_zero() {
                return Err(SpecError::BadWeight { group: usize::MAX, entry: ei });
            }
        }
        Ok(())
    }

    pub fn parse(src: &str) -> Result<Self, SpecError> {
        dsl::parse_spec(src)
    }

    pub fn to_dsl(&self) -> String {
        dsl::to_dsl(self)
    }

    /// Non-empty slots in block order.
    pub fn slots(&self) -> Vec<Slot> {
        let mut out = Vec::new();
        for (gi, g) in self.groups.iter().enumerate() {
            let t0 = match g.first_block() {
                Some(t) => t,
                None => continue,
            };
            let count = if g.repeat.0 == 0 {
                TermExpr::constant(ExactScalar::from_int(g.repeat.1))
            } else {
                TermExpr::affine_pow(g.repeat.0, g.repeat.1, 1.into()).expect("positive on the domain")
            };
            for (ei, e) in g.entries.iter().enumerate() {
                out.push(Slot { group: gi, entry: ei, t0, count: count.clone(), weight: e.weight.clone(), index: e.index });
            }
        }
        out
    }

    pub fn has_indices(&self) -> bool {
        self.prelude.iter().chain(self.groups.iter().flat_map(|g| g.entries.iter())).all(|e| e.index != Index::Free)
    }

    pub fn is_aligned(&self, other: &SequenceSpec) -> bool {
        self.prelude.len() == other.prelude.len()
            && self.groups.len() == other.groups.len()
            && self
                .groups
                .iter()
                .zip(other.groups.iter())
                .all(|(a, b)| a.repeat == b.repeat && a.entries.len() == b.entries.len())
    }

    /// Entrywise product of weights; indices come from `self`.
    pub fn scaled_by(&self, symbol: &SequenceSpec) -> Result<SequenceSpec, SpecError> {
        if !self.is_aligned(symbol) {
            return Err(SpecError::Misaligned(symbol.name.clone(), self.name.clone()));
        }
        let mul = |a: &Entry, b: &Entry| Entry { weight: a.weight.mul(&b.weight), index: a.index };
        Ok(SequenceSpec {
            name: format!("{}*{}", symbol.name, self.name),
            prelude: self.prelude.iter().zip(symbol.prelude.iter()).map(|(a, b)| mul(a, b)).collect(),
            groups: self
                .groups
                .iter()
                .zip(symbol.groups.iter())
                .map(|(g, h)| Group {
                    repeat: g.repeat,
                    entries: g.entries.iter().zip(h.entries.iter()).map(|(a, b)| mul(a, b)).collect(),
                })
                .collect(),
        })
    }

    /// Entries of blocks `1..=blocks` in enumeration order, as `(weight, index)`.
    pub fn enumerate(&self, blocks: i64) -> Vec<(f64, Option<i64>)> {
        let mut out: Vec<(f64, Option<i64>)> = self.prelude.iter().map(|e| (e.weight.eval_f64(0), e.index.at(0))).collect();
        for t in 1..=blocks {
            for g in &self.groups {
                for _ in 0..g.count_at(t) {
                    for e in &g.entries {
                        out.push((e.weight.eval_f64(t), e.index.at(t)));
                    }
                }
            }
        }
        out
    }
}
