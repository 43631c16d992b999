//! Parameter vectors, price allocations, participation and equilibrium records.
//!
//! Side `B` is the worksite side and side `C` the commuter side. Platform `W`
//! is the work-flex platform (left end of the Hotelling line) and `N` the
//! non-work-flex platform (right end).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conditions::ConditionReport;
use crate::error::{ensure_finite, Error, Result};

/// Participation values within this distance of `[0, 1]` still count as valid.
pub const SHARE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "B")]
    Worksite,
    #[serde(rename = "C")]
    Commuter,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Worksite => "B",
            Side::Commuter => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Platform {
    W,
    N,
}

impl Platform {
    pub fn rival(self) -> Platform {
        match self {
            Platform::W => Platform::N,
            Platform::N => Platform::W,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::W => "W",
            Platform::N => "N",
        })
    }
}

/// Monopoly platform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonopolyParams {
    /// Intrinsic benefit of joining, worksites.
    pub u0_b: f64,
    /// Intrinsic benefit of joining, commuters.
    pub u0_c: f64,
    /// Cross-side benefit rate of worksites (per unit commuter participation).
    pub b_b: f64,
    /// Cross-side benefit rate of commuters (per unit worksite participation).
    pub b_c: f64,
    /// Same-side inconvenience rate, worksites.
    pub t_b: f64,
    /// Same-side inconvenience rate, commuters.
    pub t_c: f64,
    /// Per-worksite service cost.
    pub f_b: f64,
    /// Per-commuter service cost.
    pub f_c: f64,
}

impl MonopolyParams {
    /// The reference parameter set used throughout the monopoly experiments.
    pub fn baseline() -> Self {
        Self {
            u0_b: 1.9,
            u0_c: 2.1,
            b_b: 0.5,
            b_c: 0.7,
            t_b: 1.1,
            t_c: 1.5,
            f_b: 0.73,
            f_c: 0.75,
        }
    }

    pub fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("u0_b", self.u0_b),
            ("u0_c", self.u0_c),
            ("b_b", self.b_b),
            ("b_c", self.b_c),
            ("t_b", self.t_b),
            ("t_c", self.t_c),
            ("f_b", self.f_b),
            ("f_c", self.f_c),
        ]
    }

    pub(crate) fn ensure_finite(&self, op: &'static str) -> Result<()> {
        ensure_finite(op, &self.fields())
    }

    pub fn cost(&self, side: Side) -> f64 {
        match side {
            Side::Worksite => self.f_b,
            Side::Commuter => self.f_c,
        }
    }
}

/// Duopoly platform parameters (single-homing and multi-homing models).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuopolyParams {
    /// Worksite cross-side benefit rate on N.
    pub alpha_n: f64,
    /// Worksite cross-side benefit rate on W.
    pub alpha_w: f64,
    /// Commuter cross-side benefit rate on N.
    pub beta_n: f64,
    /// Commuter cross-side benefit rate on W.
    pub beta_w: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub f_wb: f64,
    pub f_nb: f64,
    pub f_wc: f64,
    pub f_nc: f64,
    /// Intrinsic benefits. Only used to reconstruct utilities; `None` stands
    /// for "high enough that every agent joins some platform".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_c: Option<f64>,
}

impl DuopolyParams {
    /// The reference parameter set used throughout the duopoly experiments.
    pub fn baseline() -> Self {
        Self {
            alpha_n: 0.7,
            alpha_w: 0.6,
            beta_n: 0.5,
            beta_w: 0.8,
            t_b: 1.1,
            t_c: 1.2,
            f_wb: 0.7,
            f_nb: 0.73,
            f_wc: 0.73,
            f_nc: 0.75,
            u0_b: None,
            u0_c: None,
        }
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_n + self.alpha_w
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_n - self.alpha_w
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta_n + self.beta_w
    }

    pub fn beta_minus(&self) -> f64 {
        self.beta_n - self.beta_w
    }

    pub fn cost(&self, platform: Platform, side: Side) -> f64 {
        match (platform, side) {
            (Platform::W, Side::Worksite) => self.f_wb,
            (Platform::N, Side::Worksite) => self.f_nb,
            (Platform::W, Side::Commuter) => self.f_wc,
            (Platform::N, Side::Commuter) => self.f_nc,
        }
    }

    /// Costs in [`PriceQuad::to_array`] order.
    pub fn cost_quad(&self) -> PriceQuad {
        PriceQuad {
            p_wb: self.f_wb,
            p_nb: self.f_nb,
            p_wc: self.f_wc,
            p_nc: self.f_nc,
        }
    }

    /// Swaps the roles of the two platforms.
    pub fn mirrored(&self) -> Self {
        Self {
            alpha_n: self.alpha_w,
            alpha_w: self.alpha_n,
            beta_n: self.beta_w,
            beta_w: self.beta_n,
            f_wb: self.f_nb,
            f_nb: self.f_wb,
            f_wc: self.f_nc,
            f_nc: self.f_wc,
            ..*self
        }
    }

    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        let mut fields = vec![
            ("alpha_n", self.alpha_n),
            ("alpha_w", self.alpha_w),
            ("beta_n", self.beta_n),
            ("beta_w", self.beta_w),
            ("t_b", self.t_b),
            ("t_c", self.t_c),
            ("f_wb", self.f_wb),
            ("f_nb", self.f_nb),
            ("f_wc", self.f_wc),
            ("f_nc", self.f_nc),
        ];
        if let Some(u) = self.u0_b {
            fields.push(("u0_b", u));
        }
        if let Some(u) = self.u0_c {
            fields.push(("u0_c", u));
        }
        fields
    }

    pub(crate) fn ensure_finite(&self, op: &'static str) -> Result<()> {
        ensure_finite(op, &self.fields())
    }

    /// Single-homing models need strictly positive rates and nonnegative costs.
    pub(crate) fn ensure_single_homing_domain(&self, op: &'static str) -> Result<()> {
        self.ensure_finite(op)?;
        let rates = [
            ("alpha_n", self.alpha_n),
            ("alpha_w", self.alpha_w),
            ("beta_n", self.beta_n),
            ("beta_w", self.beta_w),
            ("t_b", self.t_b),
            ("t_c", self.t_c),
        ];
        for (name, v) in rates {
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    op,
                    reason: format!("{name} must be positive, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("f_wb", self.f_wb),
            ("f_nb", self.f_nb),
            ("f_wc", self.f_wc),
            ("f_nc", self.f_nc),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    op,
                    reason: format!("{name} must be nonnegative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Monopoly prices.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PricePair {
    pub p_b: f64,
    pub p_c: f64,
}

impl PricePair {
    pub fn new(p_b: f64, p_c: f64) -> Self {
        Self { p_b, p_c }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.p_b >= 0.0 && self.p_c >= 0.0
    }
}

/// Duopoly prices. Field order matches `to_array`: `[p_wb, p_nb, p_wc, p_nc]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PriceQuad {
    pub p_wb: f64,
    pub p_nb: f64,
    pub p_wc: f64,
    pub p_nc: f64,
}

impl PriceQuad {
    pub fn new(p_wb: f64, p_nb: f64, p_wc: f64, p_nc: f64) -> Self {
        Self { p_wb, p_nb, p_wc, p_nc }
    }

    pub fn symmetric(p_b: f64, p_c: f64) -> Self {
        Self::new(p_b, p_b, p_c, p_c)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p_wb, self.p_nb, self.p_wc, self.p_nc]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn platform(&self, platform: Platform) -> PricePair {
        match platform {
            Platform::W => PricePair::new(self.p_wb, self.p_wc),
            Platform::N => PricePair::new(self.p_nb, self.p_nc),
        }
    }

    pub fn with_platform(mut self, platform: Platform, prices: PricePair) -> Self {
        match platform {
            Platform::W => {
                self.p_wb = prices.p_b;
                self.p_wc = prices.p_c;
            }
            Platform::N => {
                self.p_nb = prices.p_b;
                self.p_nc = prices.p_c;
            }
        }
        self
    }

    pub fn price(&self, platform: Platform, side: Side) -> f64 {
        let pair = self.platform(platform);
        match side {
            Side::Worksite => pair.p_b,
            Side::Commuter => pair.p_c,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|p| *p >= 0.0)
    }

    pub fn max_abs_diff(&self, other: &PriceQuad) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn share_in_range(q: f64) -> bool {
    (-SHARE_TOLERANCE..=1.0 + SHARE_TOLERANCE).contains(&q)
}

/// Monopoly participation. Values are the raw formula output; `valid` is
/// false when either lies outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonopolyShares {
    pub q_b: f64,
    pub q_c: f64,
    pub valid: bool,
}

impl MonopolyShares {
    pub fn new(q_b: f64, q_c: f64) -> Self {
        Self {
            q_b,
            q_c,
            valid: share_in_range(q_b) && share_in_range(q_c),
        }
    }
}

/// Duopoly participation: single-homing shares on each platform plus the
/// multi-homing shares `Q_b`, `Q_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Participation {
    pub q_wb: f64,
    pub q_wc: f64,
    pub q_nb: f64,
    pub q_nc: f64,
    pub big_q_b: f64,
    pub big_q_c: f64,
    pub valid: bool,
}

impl Participation {
    /// Single-homing participation from the W shares.
    pub fn single_homing(q_wb: f64, q_wc: f64) -> Self {
        let mut p = Self {
            q_wb,
            q_wc,
            q_nb: 1.0 - q_wb,
            q_nc: 1.0 - q_wc,
            big_q_b: 0.0,
            big_q_c: 0.0,
            valid: true,
        };
        p.valid = p.all_in_range();
        p
    }

    /// Worksites multi-home (`Q_b = 1`), commuters split by `q_wc`.
    pub fn worksites_multihome(q_wc: f64) -> Self {
        let mut p = Self {
            q_wb: 0.0,
            q_wc,
            q_nb: 0.0,
            q_nc: 1.0 - q_wc,
            big_q_b: 1.0,
            big_q_c: 0.0,
            valid: true,
        };
        p.valid = p.all_in_range();
        p
    }

    fn all_in_range(&self) -> bool {
        [self.q_wb, self.q_wc, self.q_nb, self.q_nc, self.big_q_b, self.big_q_c]
            .into_iter()
            .all(share_in_range)
    }

    /// Commuter-minus-worksite participation gap on W.
    pub fn gap(&self) -> f64 {
        self.q_wc - self.q_wb
    }

    /// Total reach on a platform for a side (single-homers plus multi-homers).
    pub fn reach(&self, platform: Platform, side: Side) -> f64 {
        match (platform, side) {
            (Platform::W, Side::Worksite) => self.q_wb + self.big_q_b,
            (Platform::N, Side::Worksite) => self.q_nb + self.big_q_b,
            (Platform::W, Side::Commuter) => self.q_wc + self.big_q_c,
            (Platform::N, Side::Commuter) => self.q_nc + self.big_q_c,
        }
    }
}

/// Price-below-cost annotation for one side on one platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossLeader {
    pub side: Side,
    /// `None` for the monopoly platform.
    pub platform: Option<Platform>,
    /// `price - cost`; negative means the side is subsidized.
    pub margin: f64,
    pub flagged: bool,
}

impl LossLeader {
    pub fn new(side: Side, platform: Option<Platform>, price: f64, cost: f64) -> Self {
        let margin = price - cost;
        Self {
            side,
            platform,
            margin,
            flagged: price < cost,
        }
    }
}

/// Prices, participation and profits for one market structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Market {
    Monopoly {
        prices: PricePair,
        participation: MonopolyShares,
        profit: f64,
    },
    Duopoly {
        prices: PriceQuad,
        participation: Participation,
        profit_w: f64,
        profit_n: f64,
    },
}

/// Solver diagnostics attached to an outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Max-norm of the first-order conditions at the returned prices.
    pub foc_residual: f64,
    pub iterations: usize,
    /// Largest profit gain found by the grid deviation check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_gain: Option<f64>,
    /// Constrained solver ended on a cycle rather than a fixed point.
    #[serde(default)]
    pub cycle: bool,
    /// Demand-constraint bound in force, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub market: Market,
    pub conditions: ConditionReport,
    pub loss_leaders: Vec<LossLeader>,
    pub diagnostics: Diagnostics,
}

impl EquilibriumOutcome {
    /// Profit of the monopoly platform or of W.
    pub fn profit_w(&self) -> f64 {
        match &self.market {
            Market::Monopoly { profit, .. } => *profit,
            Market::Duopoly { profit_w, .. } => *profit_w,
        }
    }

    pub fn profit_n(&self) -> Option<f64> {
        match &self.market {
            Market::Monopoly { .. } => None,
            Market::Duopoly { profit_n, .. } => Some(*profit_n),
        }
    }

    pub fn duopoly_prices(&self) -> Option<PriceQuad> {
        match &self.market {
            Market::Duopoly { prices, .. } => Some(*prices),
            Market::Monopoly { .. } => None,
        }
    }

    pub fn monopoly_prices(&self) -> Option<PricePair> {
        match &self.market {
            Market::Monopoly { prices, .. } => Some(*prices),
            Market::Duopoly { .. } => None,
        }
    }

    pub fn participation_valid(&self) -> bool {
        match &self.market {
            Market::Monopoly { participation, .. } => participation.valid,
            Market::Duopoly { participation, .. } => participation.valid,
        }
    }

    /// Commuter-minus-worksite participation gap (W platform for duopolies).
    pub fn gap(&self) -> f64 {
        match &self.market {
            Market::Monopoly { participation, .. } => participation.q_c - participation.q_b,
            Market::Duopoly { participation, .. } => participation.gap(),
        }
    }
}
