//! Named parameter conditions with signed margins.
//!
//! A margin is positive when the condition holds, and its magnitude is the
//! slack. All conditions are strict, so a margin of exactly zero fails. The
//! two equality conditions of the multi-homing model (`C1`, `C2i`) are the
//! only exception; see [`ConditionEntry::equality`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::{DuopolyParams, MonopolyParams, Participation};

/// Tolerance for the equality-type conditions.
pub const EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    A0,
    A1,
    A2,
    #[serde(rename = "B2-sufficient")]
    B2Sufficient,
    #[serde(rename = "B2-exact")]
    B2Exact,
    #[serde(rename = "B3-proof")]
    B3Proof,
    #[serde(rename = "B3-stated")]
    B3Stated,
    C1,
    C2i,
    C2ii,
    C3,
}

impl ConditionId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::A0 => "A0",
            ConditionId::A1 => "A1",
            ConditionId::A2 => "A2",
            ConditionId::B2Sufficient => "B2-sufficient",
            ConditionId::B2Exact => "B2-exact",
            ConditionId::B3Proof => "B3-proof",
            ConditionId::B3Stated => "B3-stated",
            ConditionId::C1 => "C1",
            ConditionId::C2i => "C2i",
            ConditionId::C2ii => "C2ii",
            ConditionId::C3 => "C3",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub id: ConditionId,
    pub margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl ConditionEntry {
    /// Strict inequality: passes iff `margin > 0`.
    pub fn strict(id: ConditionId, margin: f64, note: impl Into<String>) -> Self {
        Self {
            id,
            margin,
            pass: margin > 0.0,
            note: note.into(),
        }
    }

    /// Equality-to-zero condition on `value`; margin is `-|value|` and the
    /// entry passes when `|value| <= EQUALITY_TOLERANCE`.
    pub fn equality(id: ConditionId, value: f64, note: impl Into<String>) -> Self {
        Self {
            id,
            margin: -value.abs(),
            pass: value.abs() <= EQUALITY_TOLERANCE,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn get(&self, id: ConditionId) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn passes(&self, id: ConditionId) -> bool {
        self.get(id).is_some_and(|e| e.pass)
    }

    pub fn margin(&self, id: ConditionId) -> Option<f64> {
        self.get(id).map(|e| e.margin)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn push(&mut self, entry: ConditionEntry) {
        self.entries.push(entry);
    }

    /// Compact `ID+`/`ID-` list, e.g. `A0+;A1+;A2-`.
    pub fn flags(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}{}", e.id, if e.pass { '+' } else { '-' }))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Conditions A0 (network effects exist), A1 (concave profit) and A2
/// (closed-form participation at most one) for the monopoly model.
pub fn validate_monopoly(params: &MonopolyParams) -> Result<ConditionReport> {
    params.ensure_finite("core::validate_monopoly")?;
    let p = params;
    let b_sum = p.b_b + p.b_c;
    let concavity = 4.0 * p.t_b * p.t_c - b_sum * b_sum;
    let worksite_need = (p.u0_c - p.f_c) * b_sum + 2.0 * p.t_c * (p.u0_b - p.f_b);
    let commuter_need = b_sum * (p.u0_b - p.f_b) + 2.0 * p.t_b * (p.u0_c - p.f_c);

    let mut report = ConditionReport::default();
    report.push(ConditionEntry::strict(
        ConditionId::A0,
        p.b_b.min(p.b_c).min(p.t_b).min(p.t_c),
        "min(b_b, b_c, t_b, t_c)",
    ));
    report.push(ConditionEntry::strict(
        ConditionId::A1,
        concavity,
        "4 t_b t_c - (b_b + b_c)^2",
    ));
    report.push(ConditionEntry::strict(
        ConditionId::A2,
        concavity - worksite_need.max(commuter_need),
        "closed-form q_b, q_c <= 1",
    ));
    Ok(report)
}

/// Conditions B2 (no multi-homing) and B3 (positive profits) for the
/// single-homing duopoly.
///
/// `B3-proof` (`4 t_b t_c > alpha+ beta+`) is the form the solvers gate on.
/// `B3-stated` (`4 t_b t_c > (alpha+ + beta+)^2`) is reported for reference
/// only; the reference baseline violates it. `B2-exact` is only evaluated
/// when participation is supplied.
pub fn validate_duopoly(params: &DuopolyParams, demands: Option<&Participation>) -> Result<ConditionReport> {
    params.ensure_finite("core::validate_duopoly")?;
    let p = params;
    let mut report = ConditionReport::default();
    report.push(ConditionEntry::strict(
        ConditionId::B2Sufficient,
        (p.t_b - p.alpha_w.max(p.alpha_n)).min(p.t_c - p.beta_w.max(p.beta_n)),
        "t_b > max(alpha), t_c > max(beta)",
    ));
    if let Some(q) = demands {
        report.push(ConditionEntry::strict(
            ConditionId::B2Exact,
            (p.t_b - (p.alpha_w * q.q_wc + p.alpha_n * q.q_nc)).min(p.t_c - (p.beta_w * q.q_wb + p.beta_n * q.q_nb)),
            "t_b > alpha-weighted commuter shares, t_c > beta-weighted worksite shares",
        ));
    }
    let four_tt = 4.0 * p.t_b * p.t_c;
    report.push(ConditionEntry::strict(
        ConditionId::B3Proof,
        four_tt - p.alpha_plus() * p.beta_plus(),
        "4 t_b t_c - alpha+ beta+ (gates the solvers)",
    ));
    let sum = p.alpha_plus() + p.beta_plus();
    report.push(ConditionEntry::strict(
        ConditionId::B3Stated,
        four_tt - sum * sum,
        "4 t_b t_c - (alpha+ + beta+)^2 (informational)",
    ));
    Ok(report)
}
