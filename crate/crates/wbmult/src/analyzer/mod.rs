//! Decisions on unconditional convergence and invertibility of `M_{m,Phi,Psi}`,
//! each backed by a certificate naming the rule and the facts it rests on.

pub mod aggregate;
mod rules;
mod witness;

pub use aggregate::{AggregateOperator, Coef, Family, Pattern};
pub use rules::{analyze, decide_invertibility, decide_unconditional, Context};
pub use witness::{check_rescaling_witness, RescalingWitness};

use crate::sequence::SpecError;
use crate::series::SeriesError;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("sequences do not share a block layout: {0}")]
    ShapeMismatch(String),
    #[error("rescaling witness fails: {0}")]
    InvalidWitness(String),
    #[error("contradictory certificates: {0}")]
    Inconsistent(String),
}

impl From<crate::scalar::ScalarError> for AnalyzerError {
    fn from(e: crate::scalar::ScalarError) -> Self {
        AnalyzerError::Series(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UcVerdict {
    Yes,
    No,
    NotWellDefined,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvVerdict {
    Invertible,
    NonInvertible,
    /// The multiplier is not well defined.
    NotApplicable,
    Unknown,
}

impl fmt::Display for UcVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UcVerdict::Yes => "yes",
            UcVerdict::No => "no",
            UcVerdict::NotWellDefined => "not-well-defined",
            UcVerdict::Unknown => "unknown",
        })
    }
}

impl fmt::Display for InvVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvVerdict::Invertible => "invertible",
            InvVerdict::NonInvertible => "non-invertible",
            InvVerdict::NotApplicable => "not-applicable",
            InvVerdict::Unknown => "unknown",
        })
    }
}

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    BesselBesselBounded,
    RescalingWitness,
    PatternBounded,
    NotUC_NBB_NotBessel,
    NotUC_BothNBB_Unbounded,
    NotWellDefined_Riesz,
    Inv_Identity,
    Inv_DiagonalSN,
    Inv_TwoRieszSN,
    Inv_RieszCriterion,
    NonInv_RangeGap,
    NonInv_NotInjective,
    NonInv_BesselNonFrame,
    NonInv_RieszCriterion,
    NonInv_RieszVsOvercomplete,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl Rule {
    /// Rules deciding unconditional convergence rather than invertibility.
    pub fn is_convergence(self) -> bool {
        use Rule::*;
        matches!(self, BesselBesselBounded | RescalingWitness | PatternBounded | NotUC_NBB_NotBessel | NotUC_BothNBB_Unbounded | NotWellDefined_Riesz)
    }

    pub fn parse(s: &str) -> Option<Rule> {
        use Rule::*;
        [
            BesselBesselBounded,
            RescalingWitness,
            PatternBounded,
            NotUC_NBB_NotBessel,
            NotUC_BothNBB_Unbounded,
            NotWellDefined_Riesz,
            Inv_Identity,
            Inv_DiagonalSN,
            Inv_TwoRieszSN,
            Inv_RieszCriterion,
            NonInv_RangeGap,
            NonInv_NotInjective,
            NonInv_BesselNonFrame,
            NonInv_RieszCriterion,
            NonInv_RieszVsOvercomplete,
        ]
        .into_iter()
        .find(|r| r.to_string() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub rule: Rule,
    pub premises: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Certificate {
    pub fn new(rule: Rule, premises: Vec<String>) -> Self {
        Certificate { rule, premises, witness: None }
    }

    pub fn with_witness(mut self, w: impl Into<String>) -> Self {
        self.witness = Some(w.into());
        self
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.rule, self.premises.join("; "))?;
        if let Some(w) = &self.witness {
            write!(f, " witness: {}", w)?;
        }
        Ok(())
    }
}

/// Closed form of the operator, when recognised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorKind {
    Identity,
    G(i64),
    Other,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Identity => write!(f, "I"),
            OperatorKind::G(k) => write!(f, "G{}", k),
            OperatorKind::Other => write!(f, "other"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Analysis {
    pub uc: UcVerdict,
    pub inv: InvVerdict,
    pub operator: OperatorKind,
    pub pattern: Pattern,
    pub certificates: Vec<Certificate>,
}
