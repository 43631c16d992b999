use thiserror::Error;

use crate::conditions::{ConditionId, ConditionReport};
use crate::types::{PricePair, PriceQuad};

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: non-finite or out-of-domain parameters, bad axis keys.
    Input,
    /// A solver could not produce an answer.
    Solver,
    /// A gating condition (A1 or B3-proof) failed.
    Gating,
}

/// A profitable unilateral deviation found while verifying a Nash candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub platform: crate::types::Platform,
    pub prices: PricePair,
    pub gain: f64,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{op}: invalid parameter: {reason}")]
    InvalidParameter { op: &'static str, reason: String },

    #[error("{op}: degenerate demand system (denominator {denominator})")]
    DegenerateDemand { op: &'static str, denominator: f64 },

    #[error("{op}: gating condition {condition} failed (margin {margin})")]
    GatingCondition {
        op: &'static str,
        condition: ConditionId,
        margin: f64,
        report: ConditionReport,
    },

    #[error("{op}: fixed point diverged after {iterations} iterations (residual {residual})")]
    FixedPointDiverged {
        op: &'static str,
        iterations: usize,
        residual: f64,
        last: Box<crate::monopoly::BenchmarkSolution>,
    },

    #[error("{op}: elasticity undefined on side {side} (price or participation is zero)")]
    UndefinedElasticity { op: &'static str, side: crate::types::Side },

    #[error("{op}: best-response system is singular")]
    DegenerateBestResponse { op: &'static str },

    #[error("{op}: first-order system is singular")]
    SingularSystem { op: &'static str },

    #[error("{op}: not an equilibrium, platform {} gains {} by deviating", deviation.platform, deviation.gain)]
    NotAnEquilibrium {
        op: &'static str,
        candidate: PriceQuad,
        deviation: Deviation,
    },

    #[error("{op}: closed form yields negative prices ({reason})")]
    NegativePriceRegime { op: &'static str, reason: String },

    #[error("{op}: no feasible price allocation on the grid")]
    Infeasible { op: &'static str },

    #[error("{op}: no convergence after {rounds} rounds")]
    NonConvergence {
        op: &'static str,
        rounds: usize,
        trace: Vec<PriceQuad>,
    },

    #[error("{op}: regime conditions disagree (margins {first}, {second})")]
    AmbiguousRegime { op: &'static str, first: f64, second: f64 },

    #[error("{op}: precondition failed: {reason}")]
    Precondition { op: &'static str, reason: String },

    #[error("{op}: invalid axis: {reason}")]
    InvalidAxis { op: &'static str, reason: String },

    #[error("{op}: every cell of the sweep failed")]
    AllCellsFailed { op: &'static str },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } | Error::InvalidAxis { .. } => ErrorClass::Input,
            Error::GatingCondition { .. } => ErrorClass::Gating,
            _ => ErrorClass::Solver,
        }
    }

    /// Short stable code written into sweep cells and CSV output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::DegenerateDemand { .. } => "degenerate-demand",
            Error::GatingCondition { condition, .. } => match condition {
                ConditionId::A0 | ConditionId::A1 => "non-concave-profit",
                _ => "gating-condition",
            },
            Error::FixedPointDiverged { .. } => "fixed-point-diverged",
            Error::UndefinedElasticity { .. } => "undefined-elasticity",
            Error::DegenerateBestResponse { .. } => "degenerate-best-response",
            Error::SingularSystem { .. } => "singular-system",
            Error::NotAnEquilibrium { .. } => "not-an-equilibrium",
            Error::NegativePriceRegime { .. } => "negative-price-regime",
            Error::Infeasible { .. } => "infeasible",
            Error::NonConvergence { .. } => "non-convergence",
            Error::AmbiguousRegime { .. } => "ambiguous-regime",
            Error::Precondition { .. } => "precondition",
            Error::InvalidAxis { .. } => "invalid-axis",
            Error::AllCellsFailed { .. } => "all-cells-failed",
        }
    }

    /// The condition report attached to a gating failure, if any.
    pub fn report(&self) -> Option<&ConditionReport> {
        match self {
            Error::GatingCondition { report, .. } => Some(report),
            _ => None,
        }
    }
}

pub(crate) fn ensure_finite(op: &'static str, fields: &[(&str, f64)]) -> Result<()> {
    for (name, value) in fields {
        if !value.is_finite() {
            return Err(Error::InvalidParameter {
                op,
                reason: format!("{name} is not finite ({value})"),
            });
        }
    }
    Ok(())
}
