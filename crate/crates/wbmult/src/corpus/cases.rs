use super::tables::table_kinds;
use super::CorpusError;
use crate::analyzer::{InvVerdict, OperatorKind, RescalingWitness, UcVerdict};
use crate::sequence::dsl::parse_weight;
use crate::sequence::{classify_sequence, classify_symbol, Index, SequenceClass, SequenceSpec, SymbolKind};
use crate::series::TermExpr;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Row label of a table: norm bounds of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NormClass {
    #[serde(rename = "SN")]
    Sn,
    #[serde(rename = "NBA non-NBB")]
    NbaNonNbb,
    #[serde(rename = "non-NBA NBB")]
    NonNbaNbb,
    #[serde(rename = "non-NBA non-NBB")]
    NonNbaNonNbb,
}

impl NormClass {
    pub fn of(c: &SequenceClass) -> NormClass {
        match (c.nba, c.nbb) {
            (true, true) => NormClass::Sn,
            (true, false) => NormClass::NbaNonNbb,
            (false, true) => NormClass::NonNbaNbb,
            (false, false) => NormClass::NonNbaNonNbb,
        }
    }

    pub const ALL: [NormClass; 4] = [NormClass::Sn, NormClass::NbaNonNbb, NormClass::NonNbaNbb, NormClass::NonNbaNonNbb];
}

impl fmt::Display for NormClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormClass::Sn => "SN",
            NormClass::NbaNonNbb => "NBA non-NBB",
            NormClass::NonNbaNbb => "non-NBA NBB",
            NormClass::NonNbaNonNbb => "non-NBA non-NBB",
        })
    }
}

impl FromStr for NormClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "SN" => Ok(NormClass::Sn),
            "NBA non-NBB" | "non-NBB" => Ok(NormClass::NbaNonNbb),
            "non-NBA NBB" => Ok(NormClass::NonNbaNbb),
            "non-NBA non-NBB" => Ok(NormClass::NonNbaNonNbb),
            _ => Err(format!("unknown norm class `{}`", s)),
        }
    }
}

/// Column label of a table: the class of the symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolColumn {
    #[serde(rename = "SN")]
    Sn,
    Bounded,
    Unbounded,
}

impl SymbolColumn {
    pub fn of(k: SymbolKind) -> SymbolColumn {
        match k {
            SymbolKind::SemiNormalized => SymbolColumn::Sn,
            SymbolKind::BoundedNotSN => SymbolColumn::Bounded,
            SymbolKind::Unbounded => SymbolColumn::Unbounded,
        }
    }

    pub const ALL: [SymbolColumn; 3] = [SymbolColumn::Sn, SymbolColumn::Bounded, SymbolColumn::Unbounded];
}

impl fmt::Display for SymbolColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolColumn::Sn => "SN",
            SymbolColumn::Bounded => "bounded",
            SymbolColumn::Unbounded => "unbounded",
        })
    }
}

impl FromStr for SymbolColumn {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "SN" => Ok(SymbolColumn::Sn),
            "bounded" => Ok(SymbolColumn::Bounded),
            "unbounded" => Ok(SymbolColumn::Unbounded),
            _ => Err(format!("unknown symbol column `{}`", s)),
        }
    }
}

/// "unc. conv. & INV." or "unc. conv. & NON-INV.".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subclaim {
    Inv,
    NonInv,
}

impl Subclaim {
    pub fn matches(self, inv: InvVerdict) -> bool {
        match self {
            Subclaim::Inv => inv == InvVerdict::Invertible,
            Subclaim::NonInv => inv == InvVerdict::NonInvertible,
        }
    }
}

impl fmt::Display for Subclaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subclaim::Inv => "inv",
            Subclaim::NonInv => "non-inv",
        })
    }
}

impl FromStr for Subclaim {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inv" => Ok(Subclaim::Inv),
            "non-inv" => Ok(Subclaim::NonInv),
            _ => Err(format!("unknown subclaim `{}`", s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellRef {
    pub table: u8,
    pub phi: NormClass,
    pub psi: NormClass,
    pub symbol: SymbolColumn,
    pub subclaim: Subclaim,
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{} [{} | {}] m {} / {}", self.table, self.phi, self.psi, self.symbol, self.subclaim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub uc: UcVerdict,
    pub inv: InvVerdict,
    pub operator: Option<OperatorKind>,
}

#[derive(Clone, Debug)]
pub struct ExampleCase {
    pub id: String,
    pub path: PathBuf,
    pub m: SequenceSpec,
    pub phi: SequenceSpec,
    pub psi: SequenceSpec,
    pub witness: Option<RescalingWitness>,
    /// Coordinates `f(j)` for the rearrangement experiment.
    pub stress: Option<TermExpr>,
    /// For `M_{m,phi,psi}`.
    pub expected: Expectation,
    /// For `M_{m,psi,phi}`, when stated.
    pub reverse: Option<Expectation>,
    pub cell: CellRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Source {
    Inline(String),
    File { file: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    nu: Source,
    c: Source,
    d: Source,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpect {
    uc: String,
    inv: String,
    operator: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    table: u8,
    phi: String,
    psi: String,
    symbol: String,
    subclaim: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    id: String,
    m: Source,
    phi: Source,
    psi: Option<Source>,
    stress: Option<String>,
    witness: Option<RawWitness>,
    expected: RawExpect,
    reverse: Option<RawExpect>,
    cell: RawCell,
}

fn parse_uc(s: &str) -> Result<UcVerdict, String> {
    match s {
        "yes" => Ok(UcVerdict::Yes),
        "no" => Ok(UcVerdict::No),
        "not-well-defined" => Ok(UcVerdict::NotWellDefined),
        _ => Err(format!("unknown uc verdict `{}`", s)),
    }
}

fn parse_inv(s: &str) -> Result<InvVerdict, String> {
    match s {
        "invertible" => Ok(InvVerdict::Invertible),
        "non-invertible" => Ok(InvVerdict::NonInvertible),
        "not-applicable" => Ok(InvVerdict::NotApplicable),
        _ => Err(format!("unknown inv verdict `{}`", s)),
    }
}

pub fn parse_operator(s: &str) -> Result<OperatorKind, String> {
    match s {
        "I" => Ok(OperatorKind::Identity),
        "other" => Ok(OperatorKind::Other),
        _ => s
            .strip_prefix('G')
            .and_then(|k| k.parse().ok())
            .filter(|k| *k >= 1)
            .map(OperatorKind::G)
            .ok_or_else(|| format!("unknown operator `{}`", s)),
    }
}

impl RawExpect {
    fn build(&self) -> Result<Expectation, String> {
        Ok(Expectation {
            uc: parse_uc(&self.uc)?,
            inv: parse_inv(&self.inv)?,
            operator: self.operator.as_deref().map(parse_operator).transpose()?,
        })
    }
}

/// A symbol written as one weight applied to every entry of `like`.
pub fn uniform_symbol(w: &str, like: &SequenceSpec) -> Result<SequenceSpec, String> {
    let w = parse_weight(w.trim())?;
    let mut s = like.clone();
    s.name = "m".into();
    for e in s.prelude.iter_mut() {
        if !w.shape.is_constant() {
            return Err("a uniform symbol over a prelude must be constant".into());
        }
        e.weight = w.clone();
        e.index = Index::Free;
    }
    for e in s.groups.iter_mut().flat_map(|g| g.entries.iter_mut()) {
        e.weight = w.clone();
        e.index = Index::Free;
    }
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

struct Ctx<'a> {
    path: &'a Path,
}

impl Ctx<'_> {
    fn read(&self, src: &Source) -> Result<String, CorpusError> {
        match src {
            Source::Inline(s) => Ok(s.clone()),
            Source::File { file } => {
                let p = self.path.parent().unwrap_or(Path::new(".")).join(file);
                std::fs::read_to_string(&p).map_err(|e| CorpusError::Io { path: p, source: e })
            }
        }
    }

    fn spec(&self, src: &Source, which: &str) -> Result<SequenceSpec, CorpusError> {
        let text = self.read(src)?;
        SequenceSpec::parse(&text).map_err(|e| CorpusError::Spec { path: self.path.into(), which: which.into(), source: e })
    }

    fn symbol(&self, src: &Source, which: &str, like: &SequenceSpec) -> Result<SequenceSpec, CorpusError> {
        let text = self.read(src)?;
        if text.trim_start().starts_with("seq") {
            return self.spec(src, which);
        }
        uniform_symbol(&text, like).map_err(|msg| CorpusError::Parse { path: self.path.into(), msg: format!("{}: {}", which, msg) })
    }

    fn parse_err(&self, msg: impl Into<String>) -> CorpusError {
        CorpusError::Parse { path: self.path.into(), msg: msg.into() }
    }
}

/// Parses a case file body. Does not run the self-consistency check.
pub fn parse_case(text: &str, path: &Path) -> Result<ExampleCase, CorpusError> {
    let cx = Ctx { path };
    let raw: RawCase = toml::from_str(text).map_err(|e| cx.parse_err(e.to_string()))?;
    let phi = cx.spec(&raw.phi, "phi")?;
    let psi = match &raw.psi {
        Some(s) => cx.spec(s, "psi")?,
        None => phi.clone(),
    };
    let m = cx.symbol(&raw.m, "m", &phi)?;
    let witness = match &raw.witness {
        None => None,
        Some(w) => {
            let nu = cx.symbol(&w.nu, "nu", &phi)?;
            let c = cx.symbol(&w.c, "c", &phi)?;
            let d = cx.symbol(&w.d, "d", &phi)?;
            let wrap = |which: &str, e| CorpusError::Spec { path: path.into(), which: which.into(), source: e };
            Some(RescalingWitness {
                nu,
                xi: phi.scaled_by(&c).map_err(|e| wrap("xi", e))?,
                theta: psi.scaled_by(&d).map_err(|e| wrap("theta", e))?,
            })
        }
    };
    let stress = raw.stress.as_deref().map(parse_weight).transpose().map_err(|e| cx.parse_err(format!("stress: {}", e)))?;
    let cell = CellRef {
        table: raw.cell.table,
        phi: raw.cell.phi.parse().map_err(|e: String| cx.parse_err(e))?,
        psi: raw.cell.psi.parse().map_err(|e: String| cx.parse_err(e))?,
        symbol: raw.cell.symbol.parse().map_err(|e: String| cx.parse_err(e))?,
        subclaim: raw.cell.subclaim.parse().map_err(|e: String| cx.parse_err(e))?,
    };
    if !(1..=10).contains(&cell.table) {
        return Err(cx.parse_err(format!("no table {}", cell.table)));
    }
    Ok(ExampleCase {
        id: raw.id,
        path: path.into(),
        m,
        phi,
        psi,
        witness,
        stress,
        expected: raw.expected.build().map_err(|e| cx.parse_err(e))?,
        reverse: raw.reverse.as_ref().map(|r| r.build()).transpose().map_err(|e| cx.parse_err(e))?,
        cell,
    })
}

impl ExampleCase {
    /// The declared table row and column must be what classification finds.
    pub fn check_consistency(&self) -> Result<(), CorpusError> {
        let (kphi, kpsi) = table_kinds(self.cell.table);
        let fail = |what: &str, declared: String, found: String| {
            Err(CorpusError::SelfConsistency { id: self.id.clone(), what: what.into(), declared, found })
        };
        let wrap = |source| CorpusError::Analyzer { id: self.id.clone(), source };
        for (spec, kind, norm, which) in [(&self.phi, kphi, self.cell.phi, "phi"), (&self.psi, kpsi, self.cell.psi, "psi")] {
            let c = classify_sequence(spec).map_err(|e| wrap(e.into()))?;
            if c.kind() != kind {
                return fail(&format!("{} kind", which), kind.to_string(), c.kind().to_string());
            }
            if NormClass::of(&c) != norm {
                return fail(&format!("{} norm class", which), norm.to_string(), NormClass::of(&c).to_string());
            }
        }
        let s = classify_symbol(&self.m).map_err(|e| wrap(e.into()))?;
        if SymbolColumn::of(s.kind) != self.cell.symbol {
            return fail("symbol", self.cell.symbol.to_string(), SymbolColumn::of(s.kind).to_string());
        }
        Ok(())
    }
}

/// Reads and checks one case file.
pub fn load_case(path: &Path) -> Result<ExampleCase, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io { path: path.into(), source: e })?;
    let case = parse_case(&text, path)?;
    case.check_consistency()?;
    Ok(case)
}

fn case_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let rd = std::fs::read_dir(dir).map_err(|e| CorpusError::Io { path: dir.into(), source: e })?;
    for entry in rd {
        let p = entry.map_err(|e| CorpusError::Io { path: dir.into(), source: e })?.path();
        if p.is_dir() {
            case_files(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "case") {
            out.push(p);
        }
    }
    Ok(())
}

/// All `*.case` files below `dir`, sorted by id.
pub fn load_corpus(dir: &Path) -> Result<Vec<ExampleCase>, CorpusError> {
    let mut files = Vec::new();
    case_files(dir, &mut files)?;
    files.sort();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for f in files {
        let c = load_case(&f)?;
        if !seen.insert(c.id.clone()) {
            return Err(CorpusError::Duplicate(c.id));
        }
        out.push(c);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
