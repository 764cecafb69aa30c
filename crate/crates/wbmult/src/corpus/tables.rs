use super::cases::{NormClass, SymbolColumn};
use super::CorpusError;
use crate::analyzer::Rule;
use crate::sequence::Kind;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// `(phi kind, psi kind)` of each table.
pub fn table_kinds(table: u8) -> (Kind, Kind) {
    use Kind::*;
    match table {
        1 => (NotBessel, NotBessel),
        2 => (BesselNonFrame, NotBessel),
        3 => (BesselNonFrame, BesselNonFrame),
        4 => (OvercompleteFrame, NotBessel),
        5 => (OvercompleteFrame, BesselNonFrame),
        6 => (OvercompleteFrame, OvercompleteFrame),
        7 => (RieszBasis, NotBessel),
        8 => (RieszBasis, BesselNonFrame),
        9 => (RieszBasis, OvercompleteFrame),
        10 => (RieszBasis, RieszBasis),
        _ => panic!("no table {}", table),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Claim {
    #[serde(rename = "POSSIBLE")]
    Possible,
    #[serde(rename = "NOT POSSIBLE")]
    NotPossible,
    #[serde(rename = "ALWAYS")]
    Always,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Claim::Possible => "POSSIBLE",
            Claim::NotPossible => "NOT POSSIBLE",
            Claim::Always => "ALWAYS",
        })
    }
}

/// The result a non-POSSIBLE cell rests on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Citation {
    /// An NBB sequence paired with a non-Bessel one rules out u.c.
    NbbNotBessel,
    /// Two NBB sequences with an unbounded symbol rule out u.c.
    NbbUnbounded,
    /// A Riesz basis forces the other sequence, weighted, to be Bessel.
    RieszWellDefined,
    /// An NBB Bessel non-frame never gives u.c. together with invertibility.
    NeverBoth,
    /// Invertibility of a bounded-symbol Bessel multiplier needs two frames.
    BesselNonFrame,
    /// With a Riesz basis, invertible iff the weighted other sequence is Riesz.
    RieszCriterion,
    /// A Riesz basis against an overcomplete frame is never invertible.
    RieszVsOvercomplete,
    /// Two Riesz bases with an SN symbol are always invertible.
    TwoRiesz,
}

impl Citation {
    /// At least one of these must appear among the certificates.
    pub fn rules(self) -> &'static [Rule] {
        match self {
            Citation::NbbNotBessel => &[Rule::NotUC_NBB_NotBessel],
            Citation::NbbUnbounded => &[Rule::NotUC_BothNBB_Unbounded],
            Citation::RieszWellDefined => &[Rule::NotWellDefined_Riesz],
            Citation::NeverBoth => &[Rule::NotUC_NBB_NotBessel, Rule::NonInv_BesselNonFrame],
            Citation::BesselNonFrame => &[Rule::NonInv_BesselNonFrame],
            Citation::RieszCriterion => &[Rule::NonInv_RieszCriterion],
            Citation::RieszVsOvercomplete => &[Rule::NonInv_RieszVsOvercomplete],
            Citation::TwoRiesz => &[Rule::Inv_TwoRieszSN],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub inv: Claim,
    pub noninv: Claim,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<Citation>,
    /// Cited cases, in the order the table lists them.
    #[serde(default)]
    pub cases: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    table: u8,
    phi: String,
    psi: String,
    sn: CellSpec,
    bounded: CellSpec,
    unbounded: CellSpec,
}

#[derive(Deserialize)]
struct RawTables {
    row: Vec<RawRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub table: u8,
    pub phi: NormClass,
    pub psi: NormClass,
    pub cells: [(SymbolColumn, CellSpec); 3],
}

pub fn parse_tables(text: &str) -> Result<Vec<TableRow>, String> {
    let raw: RawTables = toml::from_str(text).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for r in raw.row {
        if !(1..=10).contains(&r.table) {
            return Err(format!("no table {}", r.table));
        }
        let row = TableRow {
            table: r.table,
            phi: r.phi.parse()?,
            psi: r.psi.parse()?,
            cells: [(SymbolColumn::Sn, r.sn), (SymbolColumn::Bounded, r.bounded), (SymbolColumn::Unbounded, r.unbounded)],
        };
        for (col, c) in &row.cells {
            let decided = [c.inv, c.noninv].iter().any(|k| *k != Claim::Possible);
            if decided && c.by.is_none() {
                return Err(format!("T{} [{} | {}] {}: a decided claim needs `by`", row.table, row.phi, row.psi, col));
            }
            let possible = [c.inv, c.noninv].iter().any(|k| *k == Claim::Possible);
            if possible && c.cases.is_empty() {
                return Err(format!("T{} [{} | {}] {}: POSSIBLE without a case", row.table, row.phi, row.psi, col));
            }
        }
        out.push(row);
    }
    Ok(out)
}

pub fn load_tables(path: &Path) -> Result<Vec<TableRow>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io { path: path.into(), source: e })?;
    parse_tables(&text).map_err(|msg| CorpusError::Parse { path: path.into(), msg })
}
